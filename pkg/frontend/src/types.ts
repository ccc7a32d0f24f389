/** Wire types mirroring the annotation service's JSON bodies. */

/** The three-level rubric. The UI never constructs any other value. */
export type RubricScore = "0" | "0.5" | "1";

export const RUBRIC_SCORES: readonly RubricScore[] = ["0", "0.5", "1"];

export function isRubricScore(value: string): value is RubricScore {
  return (RUBRIC_SCORES as readonly string[]).includes(value);
}

export interface Problem {
  id: string;
  statement: string;
  category: string;
  source: string;
}

export interface ProofLineage {
  kind: string;
  parent_proof_id: string | null;
  analysis_ids: string[];
}

export interface Proof {
  id: string;
  problem_id: string;
  solution_text: string;
  self_analysis_text: string | null;
  self_score: RubricScore | null;
  lineage: ProofLineage;
  sampling_seed: number;
  created_at: number;
}

export interface ProofAnalysis {
  id: string;
  proof_id: string;
  analysis_text: string;
  extracted_score: RubricScore | null;
  format_ok: boolean;
  role: string;
  created_at: number;
}

export type TaskStatus = "pending" | "submitted";

export interface AnnotationTask {
  task_id: string;
  kind: string;
  problem_id: string;
  proof_id: string;
  /** Issue-reporting analyses surfaced for review. */
  analysis_ids: string[];
  status: TaskStatus;
  submitted_label: RubricScore | null;
  annotator_id: string | null;
  created_at: number;
}

export interface ProofLabel {
  proof_id: string;
  score: RubricScore;
  source: string;
  evidence_analysis_ids: string[];
  annotator_id: string | null;
}

export interface SubmitResult {
  task: AnnotationTask;
  record: ProofLabel;
}
