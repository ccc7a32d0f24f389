/** The annotation queue: pending review tasks, one expandable review
 * view per task, and score submission.
 *
 * All state lives on the server; this controller only mirrors the last
 * response and the reviewer's in-progress selections. Submission is
 * optimistic — the row leaves the queue immediately and reappears (with
 * the server's error shown verbatim) if the request fails. */

import type {
  AnnotationTask,
  Problem,
  Proof,
  ProofAnalysis,
  RubricScore,
  SubmitResult,
  TaskStatus,
} from "./types.js";
import { isRubricScore, RUBRIC_SCORES } from "./types.js";
import { ApiError } from "./api.js";
import { escapeHtml, renderMathText } from "./math.js";

/** What the controller needs from the service client; `ApiClient`
 * satisfies this structurally and tests substitute fakes. */
export interface AnnotatorApi {
  fetchQueue(status?: TaskStatus | "all"): Promise<AnnotationTask[]>;
  fetchProblems(): Promise<Problem[]>;
  fetchProof(proofId: string): Promise<Proof>;
  fetchAnalyses(proofId: string): Promise<ProofAnalysis[]>;
  submitScore(taskId: string, score: RubricScore, annotatorId: string): Promise<SubmitResult>;
}

export interface QueueOptions {
  annotatorId: string;
}

/** Analysis text is highlighted between these phrases: the span a
 * reviewer meta-verifies is the issue summary, not the boilerplate. */
export const EVAL_ANCHOR = "Here is my evaluation of the solution:";
export const SCORE_ANCHOR = "Based on my evaluation, the final overall score should be:";

interface RowState {
  task: AnnotationTask;
  element: HTMLLIElement;
  reviewLoaded: boolean;
  selection: RubricScore | null;
  inFlight: boolean;
}

export class QueueController {
  private readonly doc: Document;
  private readonly rows = new Map<string, RowState>();
  /** Task ids oldest-first, including optimistically removed rows
   * (their order matters if they have to be restored). */
  private order: string[] = [];
  private problems: Map<string, Problem> | null = null;

  private readonly bannerEl: HTMLElement;
  private readonly emptyEl: HTMLElement;
  private readonly listEl: HTMLUListElement;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: AnnotatorApi,
    private readonly options: QueueOptions,
  ) {
    this.doc = root.ownerDocument;
    root.innerHTML =
      `<div class="banner" hidden></div>` +
      `<p class="empty-state" hidden>No proofs are waiting for review.</p>` +
      `<ul class="task-list"></ul>`;
    this.bannerEl = root.querySelector(".banner") as HTMLElement;
    this.emptyEl = root.querySelector(".empty-state") as HTMLElement;
    this.listEl = root.querySelector(".task-list") as HTMLUListElement;
  }

  /** Fetch pending tasks and (re)build the list. On connectivity
   * failure, show a banner with a manual retry — never retry silently. */
  async load(): Promise<void> {
    let tasks: AnnotationTask[];
    try {
      tasks = await this.api.fetchQueue("pending");
    } catch (err) {
      this.showErrorBanner(describeError(err), true);
      this.sync();
      return;
    }
    this.clearBanner();
    this.rows.clear();
    this.order = [];
    this.listEl.textContent = "";
    for (const task of [...tasks].sort((a, b) => a.created_at - b.created_at)) {
      const state: RowState = {
        task,
        element: this.buildRow(task),
        reviewLoaded: false,
        selection: null,
        inFlight: false,
      };
      this.rows.set(task.task_id, state);
      this.order.push(task.task_id);
      this.listEl.appendChild(state.element);
    }
    this.sync();
  }

  /** Expand (or collapse) the review view for a task, fetching the
   * problem, proof, and analyses on first open. */
  async open(taskId: string): Promise<void> {
    const state = this.rows.get(taskId);
    if (state === undefined) {
      return;
    }
    const review = state.element.querySelector(".review") as HTMLElement;
    if (state.reviewLoaded) {
      review.hidden = !review.hidden;
      return;
    }
    try {
      const [problem, proof, analyses] = await Promise.all([
        this.lookupProblem(state.task.problem_id),
        this.api.fetchProof(state.task.proof_id),
        this.api.fetchAnalyses(state.task.proof_id),
      ]);
      review.innerHTML = this.buildReview(state.task, problem, proof, analyses);
      this.wireReview(state, review);
      state.reviewLoaded = true;
      review.hidden = false;
      this.setRowError(state, null);
    } catch (err) {
      this.setRowError(state, describeError(err));
    }
  }

  /** Submit the selected score. The row is removed optimistically and
   * restored — with the server's message — if the request fails. */
  async submit(taskId: string): Promise<void> {
    const state = this.rows.get(taskId);
    if (state === undefined || state.inFlight) {
      return; // double-submit guard
    }
    const score = state.selection;
    if (score === null) {
      return; // the submit control is disabled without a selection
    }
    state.inFlight = true;
    this.setSubmitDisabled(state, true);
    state.element.remove();
    this.sync();
    try {
      await this.api.submitScore(taskId, score, this.options.annotatorId);
      this.rows.delete(taskId);
      this.order = this.order.filter((id) => id !== taskId);
      this.showInfoBanner(`Recorded score ${score} for ${taskId}.`);
    } catch (err) {
      this.restoreRow(state);
      this.setRowError(state, describeError(err));
    } finally {
      state.inFlight = false;
      if (this.rows.has(taskId)) {
        this.setSubmitDisabled(state, state.selection === null);
      }
    }
    this.sync();
  }

  /** Task ids currently visible in the list, top to bottom. */
  visibleTaskIds(): string[] {
    return Array.from(this.listEl.querySelectorAll(".task-row")).map(
      (el) => el.getAttribute("data-task-id") as string,
    );
  }

  // ----- rendering -----

  private buildRow(task: AnnotationTask): HTMLLIElement {
    const li = this.doc.createElement("li");
    li.className = "task-row";
    li.setAttribute("data-task-id", task.task_id);
    li.innerHTML =
      `<div class="task-head">` +
      `<span class="task-title"><strong>${escapeHtml(task.problem_id)}</strong>` +
      ` · proof <code>${escapeHtml(task.proof_id)}</code></span>` +
      `<span class="task-kind">${escapeHtml(task.kind)}</span>` +
      `<span class="surfaced-count">${task.analysis_ids.length} surfaced</span>` +
      `<button type="button" class="open-btn">Review</button>` +
      `</div>` +
      `<div class="row-error" role="alert" hidden></div>` +
      `<section class="review" hidden></section>`;
    const openBtn = li.querySelector(".open-btn") as HTMLButtonElement;
    openBtn.addEventListener("click", () => {
      void this.open(task.task_id);
    });
    return li;
  }

  private buildReview(
    task: AnnotationTask,
    problem: Problem,
    proof: Proof,
    analyses: ProofAnalysis[],
  ): string {
    const surfaced = new Set(task.analysis_ids);
    const analysisBlocks =
      analyses.length === 0
        ? `<p class="no-analyses">No verifier analyses recorded.</p>`
        : analyses.map((a) => this.buildAnalysis(a, surfaced.has(a.id))).join("");
    return (
      `<label class="raw-toggle"><input type="checkbox" class="raw-toggle-input"> ` +
      `show raw text</label>` +
      `<div class="review-grid">` +
      `<article class="panel problem-panel">` +
      `<h3>Problem <code>${escapeHtml(problem.id)}</code>` +
      ` <span class="category">${escapeHtml(problem.category)}</span></h3>` +
      textPair(problem.statement) +
      `</article>` +
      `<article class="panel proof-panel">` +
      `<h3>Candidate proof <code>${escapeHtml(proof.id)}</code></h3>` +
      textPair(proof.solution_text) +
      `</article>` +
      `<article class="panel analyses-panel">` +
      `<h3>Verifier analyses</h3>` +
      analysisBlocks +
      `</article>` +
      `</div>` +
      `<footer class="score-bar">` +
      `<fieldset class="score-select"><legend>Rubric score</legend>` +
      RUBRIC_SCORES.map(
        (s) =>
          `<label class="score-option"><input type="radio" name="score-${escapeHtml(
            task.task_id,
          )}" value="${s}"> ${s}</label>`,
      ).join("") +
      `</fieldset>` +
      `<button type="button" class="submit-btn" disabled>Submit score</button>` +
      `</footer>`
    );
  }

  /** Collapsed by default; the summary line always shows the extracted
   * score badge so reviewers can triage before expanding. */
  private buildAnalysis(analysis: ProofAnalysis, surfaced: boolean): string {
    const score = analysis.extracted_score;
    const badgeClass =
      score === null ? "score-none" : `score-${score.replace(".", "_")}`;
    const badgeText = score === null ? "unparsed" : score;
    return (
      `<details class="analysis" data-analysis-id="${escapeHtml(analysis.id)}">` +
      `<summary>` +
      `<span class="score-badge ${badgeClass}">${badgeText}</span>` +
      `<code class="analysis-id">${escapeHtml(analysis.id)}</code>` +
      `<span class="role">${escapeHtml(analysis.role)}</span>` +
      (surfaced ? `<span class="surfaced-tag">surfaced</span>` : "") +
      `</summary>` +
      `<div class="analysis-body">${analysisPair(analysis.analysis_text)}</div>` +
      `</details>`
    );
  }

  private wireReview(state: RowState, review: HTMLElement): void {
    const toggle = review.querySelector(".raw-toggle-input") as HTMLInputElement;
    toggle.addEventListener("change", () => {
      for (const el of Array.from(review.querySelectorAll(".rendered"))) {
        (el as HTMLElement).hidden = toggle.checked;
      }
      for (const el of Array.from(review.querySelectorAll(".raw"))) {
        (el as HTMLElement).hidden = !toggle.checked;
      }
    });
    const submitBtn = review.querySelector(".submit-btn") as HTMLButtonElement;
    for (const input of Array.from(review.querySelectorAll(".score-select input"))) {
      input.addEventListener("change", () => {
        const value = (input as HTMLInputElement).value;
        state.selection = isRubricScore(value) ? value : null;
        this.setSubmitDisabled(state, state.selection === null || state.inFlight);
      });
    }
    submitBtn.addEventListener("click", () => {
      void this.submit(state.task.task_id);
    });
  }

  // ----- state plumbing -----

  private async lookupProblem(problemId: string): Promise<Problem> {
    if (this.problems === null) {
      const all = await this.api.fetchProblems();
      this.problems = new Map(all.map((p) => [p.id, p]));
    }
    const problem = this.problems.get(problemId);
    if (problem === undefined) {
      throw new ApiError(0, "unknown_problem", `no problem '${problemId}' in the dataset`);
    }
    return problem;
  }

  /** Reinsert a removed row at its oldest-first position. */
  private restoreRow(state: RowState): void {
    const index = this.order.indexOf(state.task.task_id);
    let anchor: Element | null = null;
    for (const laterId of this.order.slice(index + 1)) {
      const later = this.rows.get(laterId);
      if (later !== undefined && later.element.parentNode === this.listEl) {
        anchor = later.element;
        break;
      }
    }
    this.listEl.insertBefore(state.element, anchor);
  }

  private setSubmitDisabled(state: RowState, disabled: boolean): void {
    const btn = state.element.querySelector(".submit-btn");
    if (btn !== null) {
      (btn as HTMLButtonElement).disabled = disabled;
    }
  }

  private setRowError(state: RowState, message: string | null): void {
    const el = state.element.querySelector(".row-error") as HTMLElement;
    if (message === null) {
      el.hidden = true;
      el.textContent = "";
    } else {
      el.hidden = false;
      el.textContent = message;
    }
  }

  private showErrorBanner(message: string, retry: boolean): void {
    this.bannerEl.hidden = false;
    this.bannerEl.className = "banner banner-error";
    this.bannerEl.textContent = message;
    if (retry) {
      const btn = this.doc.createElement("button");
      btn.type = "button";
      btn.className = "retry-btn";
      btn.textContent = "Retry";
      btn.addEventListener("click", () => {
        void this.load();
      });
      this.bannerEl.append(" ", btn);
    }
  }

  private showInfoBanner(message: string): void {
    this.bannerEl.hidden = false;
    this.bannerEl.className = "banner banner-info";
    this.bannerEl.textContent = message;
  }

  private clearBanner(): void {
    this.bannerEl.hidden = true;
    this.bannerEl.textContent = "";
    this.bannerEl.className = "banner";
  }

  private sync(): void {
    const visible = this.visibleTaskIds().length;
    const showingError = this.bannerEl.classList.contains("banner-error");
    this.emptyEl.hidden = visible > 0 || showingError;
  }
}

/** Rendered/raw pair for prose; the review-level toggle flips which
 * one is hidden. */
function textPair(text: string): string {
  return (
    `<div class="prose rendered">${renderMathText(text)}</div>` +
    `<pre class="prose raw" hidden>${escapeHtml(text)}</pre>`
  );
}

/** Like `textPair`, but with the issue-summary region (between the two
 * anchor phrases) highlighted so reviewers check exactly the claimed
 * issues rather than re-verifying from scratch. */
function analysisPair(text: string): string {
  return (
    `<div class="prose rendered">${renderAnalysisText(text)}</div>` +
    `<pre class="prose raw" hidden>${escapeHtml(text)}</pre>`
  );
}

export function renderAnalysisText(text: string): string {
  const start = text.indexOf(EVAL_ANCHOR);
  if (start === -1) {
    return renderMathText(text);
  }
  const summaryStart = start + EVAL_ANCHOR.length;
  let summaryEnd = text.indexOf(SCORE_ANCHOR, summaryStart);
  if (summaryEnd === -1) {
    summaryEnd = text.length;
  }
  return (
    renderMathText(text.slice(0, summaryStart)) +
    `<mark class="issue-summary">${renderMathText(text.slice(summaryStart, summaryEnd))}</mark>` +
    renderMathText(text.slice(summaryEnd))
  );
}

/** One line for banners and row errors; server messages verbatim. */
export function describeError(err: unknown): string {
  if (err instanceof ApiError) {
    if (err.isConnectivity) {
      return `Cannot reach the annotation service (${err.detail}).`;
    }
    return `The service rejected the request — ${err.code}: ${err.detail}`;
  }
  return err instanceof Error ? err.message : String(err);
}
