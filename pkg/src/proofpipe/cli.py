"""Unified command-line interface."""

from __future__ import annotations

import logging
from pathlib import Path

import click

from proofpipe.autolabel import AutoLabelConfig, UndecidedPolicy
from proofpipe.core import (
    AnalysisRole,
    Category,
    MetaAssessment,
    MetaExample,
    Problem,
    Proof,
    ProofAnalysis,
    ProofLabel,
    Score,
    format_score,
)
from proofpipe.config import build_backend, build_sampling, load_config, max_in_flight
from proofpipe.rewards import VERIFIER_EVAL_ANCHOR, VERIFIER_SCORE_ANCHOR
from proofpipe.service.models import AnnotationEvent, AnnotationTask, RunManifest, TaskKind
from proofpipe.service.runs import (
    run_autolabel_dir,
    run_eval_dir,
    run_refine_dir,
    run_search_dir,
)
from proofpipe.service.store import (
    SchemaViolation,
    decode_record,
    load_json,
    load_records,
    persist_records,
)
from proofpipe.strategies import SearchConfig

logger = logging.getLogger(__name__)

_VALIDATABLE = {
    "problem": Problem,
    "proof": Proof,
    "analysis": ProofAnalysis,
    "meta_assessment": MetaAssessment,
    "label": ProofLabel,
    "meta_example": MetaExample,
    "task": AnnotationTask,
    "event": AnnotationEvent,
}


@click.group()
@click.option("--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool) -> None:
    """Orchestrate proof generation, verification, labeling, and annotation."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )


def _common_setup(config_path, seed, kind, run_id):
    config = load_config(config_path)
    return (
        build_backend(config),
        build_sampling(config),
        max_in_flight(config),
        run_id or f"{kind}-seed{seed}",
    )


@main.command()
@click.option("--problems", "problems_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--proofs", "proofs_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--n", default=8, show_default=True, help="Verification analyses per proof.")
@click.option("--m", default=5, show_default=True, help="Meta-assessments per issue-reporting analysis.")
@click.option("--k", default=2, show_default=True, help="Valid lowest-score analyses required.")
@click.option("--undecided", type=click.Choice(["route", "discard"]), default="route", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--run-id", default=None)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
def autolabel(problems_path, proofs_path, n, m, k, undecided, seed, out_dir, run_id, config_path):
    """Automatically label proofs; undecidable ones are routed or discarded."""
    backend, params, in_flight, run_id = _common_setup(config_path, seed, "autolabel", run_id)
    cfg = AutoLabelConfig(
        n=n,
        m=m,
        k=k,
        undecided_policy=(
            UndecidedPolicy.ROUTE_TO_HUMAN if undecided == "route" else UndecidedPolicy.DISCARD
        ),
    )
    problems = load_records(Path(problems_path), Problem)
    proofs = load_records(Path(proofs_path), Proof)
    result, manifest = run_autolabel_dir(
        out_dir, run_id, problems, proofs, cfg, backend, seed, params, in_flight
    )
    click.echo(
        f"run {manifest.run_id}: labeled={len(result.labels)} routed={len(result.routed)} "
        f"discarded={len(result.discarded)} meta_examples={len(result.meta_examples)}"
    )
    click.echo(f"outputs: {out_dir}")


@main.command("eval")
@click.option("--problems", "problems_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--g", default=8, show_default=True, help="Proof samples per problem.")
@click.option("--v", default=8, show_default=True, help="Verification analyses per proof.")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--run-id", default=None)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
def eval_cmd(problems_path, g, v, seed, out_dir, run_id, config_path):
    """Score each problem by majority-voted verification of sampled proofs."""
    backend, params, in_flight, run_id = _common_setup(config_path, seed, "eval", run_id)
    problems = load_records(Path(problems_path), Problem)
    evals, manifest = run_eval_dir(
        out_dir, run_id, problems, g, v, backend, seed, params, in_flight
    )
    for pe in evals:
        value = "missing" if pe.value is None else str(pe.value)
        click.echo(f"{pe.problem_id}: {value}")
    click.echo(f"outputs: {out_dir}")


@main.command()
@click.option("--problems", "problems_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--threads", default=32, show_default=True)
@click.option("--max-iters", default=8, show_default=True)
@click.option("--v", default=8, show_default=True, help="Analyses for final-proof verification.")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--run-id", default=None)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
def refine(problems_path, threads, max_iters, v, seed, out_dir, run_id, config_path):
    """Run sequential self-refinement threads and report Pass@1 / Best@N."""
    backend, params, in_flight, run_id = _common_setup(config_path, seed, "refine", run_id)
    problems = load_records(Path(problems_path), Problem)
    results, manifest = run_refine_dir(
        out_dir, run_id, problems, threads, max_iters, v, backend, seed, params, in_flight
    )
    for problem_id in sorted(results):
        metrics = results[problem_id].metrics
        if metrics is None:
            click.echo(f"{problem_id}: no scorable threads")
        else:
            click.echo(
                f"{problem_id}: pass@1={metrics.pass_at_1} "
                f"best@{threads}={format_score(metrics.best_at_n)}"
            )
    click.echo(f"outputs: {out_dir}")


@main.command()
@click.option("--problems", "problems_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--init", "init_proofs", default=64, show_default=True)
@click.option("--analyses", "analyses_per_proof", default=64, show_default=True)
@click.option("--top", "top_select", default=64, show_default=True)
@click.option("--pairs", "pairs_per_proof", default=8, show_default=True)
@click.option("--max-iters", "max_iterations", default=16, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--run-id", default=None)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
def search(problems_path, init_proofs, analyses_per_proof, top_select, pairs_per_proof,
           max_iterations, seed, out_dir, run_id, config_path):
    """Pool search until a proof passes every verification attempt."""
    backend, params, in_flight, run_id = _common_setup(config_path, seed, "search", run_id)
    cfg = SearchConfig(
        init_proofs=init_proofs,
        analyses_per_proof=analyses_per_proof,
        top_select=top_select,
        pairs_per_proof=pairs_per_proof,
        max_iterations=max_iterations,
    )
    problems = load_records(Path(problems_path), Problem)
    results, manifest = run_search_dir(
        out_dir, run_id, problems, cfg, backend, seed, params, in_flight
    )
    for problem_id in sorted(results):
        res = results[problem_id]
        click.echo(
            f"{problem_id}: {res.certificate.value} best={res.best_proof.id} "
            f"pool={len(res.pool.entries)} iterations={res.pool.iteration}"
        )
    click.echo(f"outputs: {out_dir}")


@main.command()
@click.option("--data-dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8765, show_default=True)
def serve(data_dir, host, port):
    """Serve datasets and the annotation queue over HTTP."""
    import uvicorn

    from proofpipe.service.api import create_app

    uvicorn.run(create_app(data_dir), host=host, port=port, log_level="info")


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--kind", required=True, type=click.Choice(sorted(_VALIDATABLE) + ["manifest"]))
def validate(file, kind):
    """Check a dataset file against its record schema."""
    try:
        if kind == "manifest":
            decode_record(load_json(file), RunManifest)
            click.echo(f"OK: valid {kind}")
        else:
            records = load_records(Path(file), _VALIDATABLE[kind])
            click.echo(f"OK: {len(records)} {kind} record(s)")
    except SchemaViolation as exc:
        click.echo(f"INVALID: {exc}", err=True)
        raise SystemExit(1)
    except (ValueError, KeyError, TypeError) as exc:
        click.echo(f"INVALID: {exc}", err=True)
        raise SystemExit(1)


def _demo_analysis(analysis_id: str, proof_id: str, finding: str, score: Score, created_at: int) -> ProofAnalysis:
    text = (
        f"{VERIFIER_EVAL_ANCHOR}\n{finding}\n\n"
        f"{VERIFIER_SCORE_ANCHOR} \\boxed{{{format_score(score)}}}"
    )
    return ProofAnalysis(
        id=analysis_id,
        proof_id=proof_id,
        analysis_text=text,
        extracted_score=score,
        format_ok=True,
        role=AnalysisRole.EXTERNAL_VERIFIER,
        created_at=created_at,
    )


@main.command("seed-demo")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def seed_demo(out_dir):
    """Write a small servable data directory with two pending review tasks."""
    out = Path(out_dir)
    problems = [
        Problem(
            id="demo-sum",
            statement=(
                "Prove that for every positive integer $n$, "
                "$\\sum_{k=1}^{n} k = \\frac{n(n+1)}{2}$."
            ),
            category=Category.ALGEBRA,
            source="demo",
        ),
        Problem(
            id="demo-sqrt2",
            statement="Prove that $\\sqrt{2}$ is irrational.",
            category=Category.NUMBER_THEORY,
            source="demo",
        ),
    ]
    proofs = [
        Proof(
            id="demo-sum/p1",
            problem_id="demo-sum",
            solution_text=(
                "We use induction on $n$. For $n=1$ both sides equal $1$. "
                "Assuming the identity for $n$, adding $n+1$ to both sides gives "
                "$\\frac{n(n+1)}{2} + (n+1) = \\frac{(n+1)(n+2)}{2}$. "
                "The inductive step is asserted for all $n$ simultaneously without "
                "fixing the induction hypothesis."
            ),
            created_at=1,
        ),
        Proof(
            id="demo-sqrt2/p1",
            problem_id="demo-sqrt2",
            solution_text=(
                "Suppose $\\sqrt{2} = p/q$ in lowest terms. Then $p^2 = 2 q^2$, so "
                "$p$ is even; write $p = 2r$. Then $q^2 = 2 r^2$, so $q$ is even, "
                "contradicting lowest terms. The step from $p^2$ even to $p$ even "
                "is used without justification."
            ),
            created_at=2,
        ),
    ]
    analyses = [
        _demo_analysis(
            "demo-sum/p1/a00",
            "demo-sum/p1",
            "The inductive step never fixes the hypothesis for a specific $n$, "
            "so the argument as written is circular; the skeleton is repairable.",
            Score.HALF,
            1,
        ),
        _demo_analysis(
            "demo-sum/p1/a01",
            "demo-sum/p1",
            "The base case and algebra are fine, but the induction is not set up "
            "correctly; a significant step is missing.",
            Score.HALF,
            2,
        ),
        _demo_analysis(
            "demo-sqrt2/p1/a00",
            "demo-sqrt2/p1",
            "The parity lemma ($p^2$ even implies $p$ even) is cited without proof; "
            "the rest of the descent is correct.",
            Score.HALF,
            3,
        ),
    ]
    tasks = [
        AnnotationTask(
            task_id="task-demo-sum/p1",
            kind=TaskKind.PROOF_SCORE,
            problem_id="demo-sum",
            proof_id="demo-sum/p1",
            analysis_ids=("demo-sum/p1/a00", "demo-sum/p1/a01"),
            created_at=1,
        ),
        AnnotationTask(
            task_id="task-demo-sqrt2/p1",
            kind=TaskKind.PROOF_SCORE,
            problem_id="demo-sqrt2",
            proof_id="demo-sqrt2/p1",
            analysis_ids=("demo-sqrt2/p1/a00",),
            created_at=2,
        ),
    ]
    persist_records(out / "problems.jsonl", problems)
    persist_records(out / "proofs.jsonl", proofs)
    persist_records(out / "analyses.jsonl", analyses)
    persist_records(out / "tasks.jsonl", tasks)
    click.echo(f"demo data ready in {out} ({len(tasks)} pending tasks)")


if __name__ == "__main__":
    main()
