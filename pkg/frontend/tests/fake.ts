/** In-memory stand-in for the service used by the DOM unit tests. */

import type {
  AnnotationTask,
  Problem,
  Proof,
  ProofAnalysis,
  RubricScore,
  SubmitResult,
  TaskStatus,
} from "../src/types.js";
import type { AnnotatorApi } from "../src/queue.js";
import { ApiError } from "../src/api.js";

export function makeProblem(id: string, statement = `Prove $1+1=2$ (${id}).`): Problem {
  return { id, statement, category: "algebra", source: "fake" };
}

export function makeProof(problemId: string, suffix = "p1"): Proof {
  return {
    id: `${problemId}/${suffix}`,
    problem_id: problemId,
    solution_text: `Observe that $\\frac{2}{2} = 1$, hence the claim (${suffix}).`,
    self_analysis_text: null,
    self_score: null,
    lineage: { kind: "one_shot", parent_proof_id: null, analysis_ids: [] },
    sampling_seed: 0,
    created_at: 1,
  };
}

export function makeAnalysis(
  proofId: string,
  index: number,
  score: RubricScore | null,
): ProofAnalysis {
  const text =
    score === null
      ? "The verifier output was cut off mid-sentence"
      : `Here is my evaluation of the solution:\n` +
        `The telescoping step silently divides by $n$.\n\n` +
        `Based on my evaluation, the final overall score should be: \\boxed{${score}}`;
  return {
    id: `${proofId}/a${String(index).padStart(2, "0")}`,
    proof_id: proofId,
    analysis_text: text,
    extracted_score: score,
    format_ok: score !== null,
    role: "external_verifier",
    created_at: index + 1,
  };
}

export function makeTask(
  problemId: string,
  createdAt: number,
  analysisIds: string[],
): AnnotationTask {
  return {
    task_id: `task-${problemId}/p1`,
    kind: "proof_score",
    problem_id: problemId,
    proof_id: `${problemId}/p1`,
    analysis_ids: analysisIds,
    status: "pending",
    submitted_label: null,
    annotator_id: null,
    created_at: createdAt,
  };
}

interface Gate {
  promise: Promise<void>;
  release: () => void;
  fail: (err: Error) => void;
}

export function makeGate(): Gate {
  let release!: () => void;
  let fail!: (err: Error) => void;
  const promise = new Promise<void>((resolve, reject) => {
    release = resolve;
    fail = reject;
  });
  return { promise, release, fail };
}

export class FakeApi implements AnnotatorApi {
  problems: Problem[] = [];
  proofs = new Map<string, Proof>();
  analyses = new Map<string, ProofAnalysis[]>();
  tasks: AnnotationTask[] = [];

  queueError: Error | null = null;
  proofError: Error | null = null;
  submitError: Error | null = null;
  /** When set, submitScore waits on the gate before settling. */
  submitGate: Gate | null = null;

  submitCalls: Array<{ taskId: string; score: RubricScore; annotatorId: string }> = [];

  async fetchQueue(_status: TaskStatus | "all" = "pending"): Promise<AnnotationTask[]> {
    if (this.queueError !== null) {
      throw this.queueError;
    }
    return [...this.tasks];
  }

  async fetchProblems(): Promise<Problem[]> {
    return [...this.problems];
  }

  async fetchProof(proofId: string): Promise<Proof> {
    if (this.proofError !== null) {
      throw this.proofError;
    }
    const proof = this.proofs.get(proofId);
    if (proof === undefined) {
      throw new ApiError(404, "not_found", `no proof '${proofId}'`);
    }
    return proof;
  }

  async fetchAnalyses(proofId: string): Promise<ProofAnalysis[]> {
    return this.analyses.get(proofId) ?? [];
  }

  async submitScore(
    taskId: string,
    score: RubricScore,
    annotatorId: string,
  ): Promise<SubmitResult> {
    this.submitCalls.push({ taskId, score, annotatorId });
    if (this.submitGate !== null) {
      await this.submitGate.promise;
    }
    if (this.submitError !== null) {
      throw this.submitError;
    }
    const task = this.tasks.find((t) => t.task_id === taskId);
    if (task === undefined) {
      throw new ApiError(404, "task_not_found", `no task '${taskId}'`);
    }
    this.tasks = this.tasks.filter((t) => t.task_id !== taskId);
    const submitted: AnnotationTask = {
      ...task,
      status: "submitted",
      submitted_label: score,
      annotator_id: annotatorId,
    };
    return {
      task: submitted,
      record: {
        proof_id: task.proof_id,
        score,
        source: "human",
        evidence_analysis_ids: task.analysis_ids,
        annotator_id: annotatorId,
      },
    };
  }
}

/** A fake seeded with `ids` problems, one proof and three analyses each. */
export function seededFake(ids: string[]): FakeApi {
  const api = new FakeApi();
  for (const [i, id] of ids.entries()) {
    const proof = makeProof(id);
    const analyses = [
      makeAnalysis(proof.id, 0, "0.5"),
      makeAnalysis(proof.id, 1, "1"),
      makeAnalysis(proof.id, 2, null),
    ];
    api.problems.push(makeProblem(id));
    api.proofs.set(proof.id, proof);
    api.analyses.set(proof.id, analyses);
    api.tasks.push(makeTask(id, i + 1, [analyses[0]!.id]));
  }
  return api;
}

export function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}
