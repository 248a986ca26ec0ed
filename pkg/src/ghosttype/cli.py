"""Command-line entry points (one console script per command)."""

from __future__ import annotations

import json
import sys

import click

from . import theory
from .agents import (
    ThresholdPolicy,
    TrainConfig,
    collect_offline,
    fitted_q_train,
    make_env_factory,
    parse_policy_spec,
    q_learning_train,
)
from .corpus import (
    FilterConfig,
    filter_corpus_report,
    load_corpus_file,
    load_desk_corpus,
    train_eval_split,
)
from .evaluate import (
    EvalConfig,
    evaluate,
    results_bundle,
    rows_to_csv,
)
from .lm import LanguageModel, LmConfig, build_lm
from .mdp import RewardParams
from .study import StudyServer, analysis_document, load_session_logs


@click.command("filter-corpus")
@click.option("--in", "input_path", required=True, type=click.Path(exists=True))
@click.option("--out", "output_path", required=True, type=click.Path())
@click.option("--max-words", default=10, show_default=True)
@click.option("--max-oov-rate", default=1.0, show_default=True)
def filter_corpus_cmd(input_path, output_path, max_words, max_oov_rate):
    """Filter a one-sentence-per-line corpus; prints a JSON summary."""
    config = FilterConfig(max_words=max_words, max_oov_rate=max_oov_rate)
    with open(input_path, encoding="utf-8") as f:
        records, summary = filter_corpus_report(f, config)
    with open(output_path, "w", encoding="utf-8") as f:
        for r in records:
            f.write(r.text + "\n")
    click.echo(summary.to_json())


@click.command("build-lm")
@click.option("--in", "input_path", required=True, type=click.Path(exists=True))
@click.option("--out", "output_path", required=True, type=click.Path())
def build_lm_cmd(input_path, output_path):
    """Build and save the word model from a filtered corpus file."""
    records = load_corpus_file(input_path)
    model = build_lm(records)
    model.save(output_path)
    click.echo(
        json.dumps(
            {
                "sentences": len(records),
                "vocabulary": len(model.vocab.counts),
                "bigrams": len(model.bigrams.counts),
                "model_hash": model.content_hash(),
            }
        )
    )


@click.command("suggest")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--context", required=True)
@click.option("--k", default=5, show_default=True)
@click.option("--multiword", is_flag=True)
@click.option("--lam", default=0.7, show_default=True)
def suggest_cmd(model_path, context, k, multiword, lam):
    """Print the candidate slate for a typed context as JSON."""
    from .mdp import context_parts

    model = LanguageModel.load(model_path)
    prev, prefix = context_parts(context.lower())
    config = LmConfig(k=k, lam=lam, multiword=multiword)
    cands = model.candidates(prev, prefix, config)
    click.echo(
        json.dumps(
            [
                {
                    "completion": c.completion,
                    "words": list(c.full_words),
                    "raw_prob": c.raw_prob,
                    "norm_prob": c.norm_prob,
                }
                for c in cands
            ]
        )
    )


@click.command("two-word")
@click.option("--n", required=True, type=int)
@click.option("--m", required=True, type=int)
@click.option("--alpha", required=True, type=float)
@click.option("--beta", required=True, type=float)
def two_word_cmd(n, m, alpha, beta):
    """Print closed-form and brute-force Q tables for a two-word instance."""
    inst = theory.TwoWordInstance(n=n, m=m, alpha=alpha, beta=beta)
    myo = theory.q_myopic_at_m(inst)
    far = theory.q_farsighted_at_m(inst)
    interval = theory.disagreement_interval(n, m, beta)
    doc = {
        "closed_form": {
            "myopic": {"q_show": myo.q_show, "q_wait": myo.q_wait, "action": myo.action},
            "farsighted": {
                "q_show": far.q_show,
                "q_wait": far.q_wait,
                "action": far.action,
                "in_validity_regime": far.in_validity_regime,
            },
        },
        "disagreement_interval": {
            "alpha_lo": interval.alpha_lo,
            "alpha_hi": interval.alpha_hi,
            "nonempty": interval.nonempty,
        },
        "brute_force": {},
    }
    for gamma in (0.0, 1.0):
        table = theory.brute_force_two_word(inst, gamma)
        doc["brute_force"][f"gamma={gamma:g}"] = {
            str(t): {
                "q_show": table.q(t, theory.SHOW),
                "q_wait": table.q(t, theory.WAIT),
                "action": table.action_at(t),
            }
            for t in range(1, n + 1)
        }
    click.echo(json.dumps(doc, indent=2))


@click.command("disagree-sweep")
@click.option("--words", "words_path", type=click.Path(exists=True), default=None,
              help="File of `word [count]` lines; default: top 500 desk-corpus words.")
@click.option("--beta", default=60.0 / 521.0, show_default=True)
@click.option("--alphas", default=None, help="Comma-separated grid; default 0.05..0.95.")
@click.option("--top", default=500, show_default=True)
@click.option("--uniform", is_flag=True, help="Uniform prior instead of frequency.")
def disagree_sweep_cmd(words_path, beta, alphas, top, uniform):
    """CSV of (alpha, states, disagreements, fraction) for the DP sweep."""
    if words_path:
        words, weights = [], []
        with open(words_path, encoding="utf-8") as f:
            for line in f:
                parts = line.split()
                if not parts:
                    continue
                words.append(parts[0])
                weights.append(float(parts[1]) if len(parts) > 1 else 1.0)
    else:
        model = build_lm(load_desk_corpus())
        pairs = model.vocab.most_common(top)
        words = [w for w, _ in pairs]
        weights = [c for _, c in pairs]
    grid = (
        [float(a) for a in alphas.split(",")] if alphas else theory.default_alpha_grid()
    )
    click.echo("alpha,states,disagreements,fraction")
    for alpha, rep in theory.alpha_sweep(words, weights, grid, beta, uniform=uniform):
        click.echo(f"{alpha},{rep.total_states},{rep.disagreements},{rep.fraction:.6f}")


def _load_model_and_sentences(corpus_path, model_path, eval_size, seed):
    if corpus_path:
        records = load_corpus_file(corpus_path)
    else:
        records = load_desk_corpus()
    train, eval_set = train_eval_split(records, eval_size, seed)
    if model_path:
        model = LanguageModel.load(model_path)
    else:
        model = build_lm(train)
    return model, train, eval_set


@click.command("train-q")
@click.option("--mode", type=click.Choice(["online", "offline"]), required=True)
@click.option("--gamma", default=0.99, show_default=True)
@click.option("--steps", default=250_000, show_default=True)
@click.option("--out", "output_path", required=True, type=click.Path())
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), default=None)
@click.option("--model", "model_path", type=click.Path(exists=True), default=None)
@click.option("--preset", default="default", show_default=True)
@click.option("--tau", default=0.3, show_default=True, help="Offline base policy threshold.")
@click.option("--eps", default=0.05, show_default=True, help="Offline exploration rate.")
@click.option("--n-trajectories", default=5000, show_default=True)
@click.option("--eval-size", default=50, show_default=True)
@click.option("--seed", default=0, show_default=True)
def train_q_cmd(mode, gamma, steps, output_path, corpus_path, model_path, preset,
                tau, eps, n_trajectories, eval_size, seed):
    """Train a Q table online (tabular TD) or offline (fitted Q-iteration)."""
    model, train, _ = _load_model_and_sentences(corpus_path, model_path, eval_size, seed)
    params = RewardParams.preset(preset)
    factory = make_env_factory(train, model, LmConfig(), params, seed=seed)
    config = TrainConfig(gamma=gamma, steps=steps, seed=seed)
    if mode == "online":
        table = q_learning_train(factory, config)
    else:
        dataset = collect_offline(
            ThresholdPolicy(tau), factory, n_trajectories=n_trajectories,
            exploration_rate=eps, seed=seed,
        )
        table = fitted_q_train(dataset, config)
    table.save(output_path)
    click.echo(json.dumps({"mode": mode, "gamma": gamma, "cells": len(table.values)}))


@click.command("collect-offline")
@click.option("--tau", default=0.3, show_default=True)
@click.option("--eps", default=0.05, show_default=True)
@click.option("--n", "n_trajectories", default=5000, show_default=True)
@click.option("--out", "output_path", required=True, type=click.Path())
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), default=None)
@click.option("--preset", default="default", show_default=True)
@click.option("--eval-size", default=50, show_default=True)
@click.option("--seed", default=0, show_default=True)
def collect_offline_cmd(tau, eps, n_trajectories, output_path, corpus_path, preset,
                        eval_size, seed):
    """Collect the offline trajectory dataset (threshold base + exploration)."""
    model, train, _ = _load_model_and_sentences(corpus_path, None, eval_size, seed)
    params = RewardParams.preset(preset)
    factory = make_env_factory(train, model, LmConfig(), params, seed=seed)
    dataset = collect_offline(
        ThresholdPolicy(tau), factory, n_trajectories=n_trajectories,
        exploration_rate=eps, seed=seed,
    )
    dataset.save(output_path)
    click.echo(json.dumps(dataset.provenance))


@click.command("run-eval")
@click.option("--policies", default="oracle,random,threshold:0.3", show_default=True)
@click.option("--preset", default="default", show_default=True)
@click.option("--runs", default=5, show_default=True)
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), default=None)
@click.option("--model", "model_path", type=click.Path(exists=True), default=None)
@click.option("--eval-size", default=50, show_default=True)
@click.option("--k", default=1, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--json-out", "json_path", type=click.Path(), default=None)
def run_eval_cmd(policies, preset, runs, corpus_path, model_path, eval_size, k, seed,
                 json_path):
    """Evaluate comma-separated policies; prints a CSV of MetricsRows."""
    from .agents import build_policy

    model, _, eval_set = _load_model_and_sentences(corpus_path, model_path, eval_size, seed)
    config = EvalConfig(
        sentences=tuple(eval_set),
        runs=runs,
        params=RewardParams.preset(preset),
        lm_config=LmConfig(k=k),
        seed_base=seed,
    )
    providers = []
    for text in policies.split(","):
        spec = parse_policy_spec(text.strip())
        providers.append((text.strip(), lambda s, spec=spec: build_policy(spec, seed=s)))
    rows = evaluate(providers, model, config)
    click.echo(rows_to_csv(rows), nl=False)
    if json_path:
        with open(json_path, "w", encoding="utf-8") as f:
            f.write(results_bundle(rows, model, config))


@click.command("serve")
@click.option("--model", "model_path", type=click.Path(exists=True), default=None)
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), default=None)
@click.option("--policy", default="threshold:0", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--logs", "log_dir", type=click.Path(), default=None)
@click.option("--prompts", "prompts_path", type=click.Path(exists=True), default=None)
@click.option("--n-prompts", default=42, show_default=True)
@click.option("--seed", default=0, show_default=True)
def serve_cmd(model_path, corpus_path, policy, port, host, log_dir, prompts_path,
              n_prompts, seed):
    """Run the typing-study HTTP service."""
    import uvicorn

    from .service import create_app

    if model_path:
        model = LanguageModel.load(model_path)
        pool = load_corpus_file(corpus_path) if corpus_path else load_desk_corpus()
    else:
        pool = load_corpus_file(corpus_path) if corpus_path else load_desk_corpus()
        model = build_lm(pool)
    if prompts_path:
        prompts = [r.text for r in load_corpus_file(prompts_path)]
    else:
        import random as _random

        prompts = [r.text for r in pool]
        _random.Random(seed).shuffle(prompts)
        # sessions need distinct prompts; the pool may carry duplicates
        prompts = list(dict.fromkeys(prompts))[:n_prompts]
    server = StudyServer(
        model, LmConfig(), default_policy=policy, default_prompts=prompts,
        log_dir=log_dir,
    )
    uvicorn.run(create_app(server), host=host, port=port, log_level="warning")


@click.command("analyze-study")
@click.option("--logs", "log_dir", required=True, type=click.Path(exists=True))
@click.option("--fatigue-csv", "fatigue_path", type=click.Path(), default=None)
def analyze_study_cmd(log_dir, fatigue_path):
    """Load estimate (JSON on stdout) + optional fatigue-curve CSV."""
    logs = load_session_logs(log_dir)
    doc = analysis_document(logs)
    click.echo(json.dumps(doc, indent=2))
    if fatigue_path:
        with open(fatigue_path, "w", encoding="utf-8") as f:
            f.write("curve,bin_start,rate,ci95,n\n")
            for label, buckets in doc["fatigue"].items():
                for b in buckets:
                    f.write(
                        f"{label},{b['bin_start']},{b['rate']:.6f},{b['ci95']:.6f},{b['n']}\n"
                    )


def main(argv=None):
    """Dispatch `python -m ghosttype <command> ...`."""
    commands = {
        "filter-corpus": filter_corpus_cmd,
        "build-lm": build_lm_cmd,
        "suggest": suggest_cmd,
        "two-word": two_word_cmd,
        "disagree-sweep": disagree_sweep_cmd,
        "train-q": train_q_cmd,
        "collect-offline": collect_offline_cmd,
        "run-eval": run_eval_cmd,
        "serve": serve_cmd,
        "analyze-study": analyze_study_cmd,
    }
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] in ("-h", "--help"):
        click.echo("commands: " + ", ".join(commands))
        return 0
    name = argv[0]
    if name not in commands:
        click.echo(f"unknown command {name!r}; one of: {', '.join(commands)}", err=True)
        return 2
    return commands[name].main(argv[1:], standalone_mode=True)


if __name__ == "__main__":
    sys.exit(main())
