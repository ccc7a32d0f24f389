/** Client-side rendering of the mathematical notation that appears in
 * problems, proofs, and analyses: `$...$` inline and `$$...$$` display
 * segments with the TeX subset the corpus actually uses (fractions,
 * radicals, sums/products with limits, scripts, blackboard letters,
 * boxed scores, common symbols).
 *
 * Rendering is best-effort and loss-free: a segment that fails to parse
 * is shown as its escaped source text, and the surrounding UI always
 * offers a raw-text toggle for fidelity disputes. */

const HTML_ESCAPES: Record<string, string> = {
  "&": "&amp;",
  "<": "&lt;",
  ">": "&gt;",
  '"': "&quot;",
  "'": "&#39;",
};

export function escapeHtml(text: string): string {
  return text.replace(/[&<>"']/g, (ch) => HTML_ESCAPES[ch] as string);
}

/** Symbols rendered directly as Unicode. */
const SYMBOLS: Record<string, string> = {
  alpha: "α",
  beta: "β",
  gamma: "γ",
  delta: "δ",
  epsilon: "ε",
  varepsilon: "ε",
  zeta: "ζ",
  eta: "η",
  theta: "θ",
  lambda: "λ",
  mu: "μ",
  nu: "ν",
  xi: "ξ",
  pi: "π",
  rho: "ρ",
  sigma: "σ",
  tau: "τ",
  phi: "φ",
  varphi: "φ",
  chi: "χ",
  psi: "ψ",
  omega: "ω",
  Gamma: "Γ",
  Delta: "Δ",
  Theta: "Θ",
  Lambda: "Λ",
  Pi: "Π",
  Sigma: "Σ",
  Phi: "Φ",
  Psi: "Ψ",
  Omega: "Ω",
  sum: "∑",
  prod: "∏",
  int: "∫",
  infty: "∞",
  partial: "∂",
  nabla: "∇",
  pm: "±",
  mp: "∓",
  times: "×",
  div: "÷",
  cdot: "·",
  circ: "∘",
  le: "≤",
  leq: "≤",
  ge: "≥",
  geq: "≥",
  ne: "≠",
  neq: "≠",
  equiv: "≡",
  approx: "≈",
  sim: "∼",
  cong: "≅",
  propto: "∝",
  in: "∈",
  notin: "∉",
  subset: "⊂",
  subseteq: "⊆",
  supset: "⊃",
  supseteq: "⊇",
  cup: "∪",
  cap: "∩",
  setminus: "∖",
  emptyset: "∅",
  varnothing: "∅",
  forall: "∀",
  exists: "∃",
  neg: "¬",
  land: "∧",
  lor: "∨",
  implies: "⟹",
  iff: "⟺",
  to: "→",
  mapsto: "↦",
  rightarrow: "→",
  leftarrow: "←",
  Rightarrow: "⇒",
  Leftarrow: "⇐",
  Leftrightarrow: "⇔",
  mid: "∣",
  nmid: "∤",
  parallel: "∥",
  perp: "⊥",
  angle: "∠",
  ldots: "…",
  cdots: "⋯",
  dots: "…",
  vdots: "⋮",
  prime: "′",
  degree: "°",
  gcd: "gcd",
  bmod: " mod ",
  pmod: " mod ",
  mod: " mod ",
  min: "min",
  max: "max",
  lim: "lim",
  log: "log",
  ln: "ln",
  exp: "exp",
  sin: "sin",
  cos: "cos",
  tan: "tan",
  quad: "  ",
  qquad: "    ",
};

const BLACKBOARD: Record<string, string> = {
  R: "ℝ",
  N: "ℕ",
  Z: "ℤ",
  Q: "ℚ",
  C: "ℂ",
  P: "ℙ",
  F: "𝔽",
};

/** Render mixed prose: plain text is escaped, math segments are
 * typeset. Newlines are preserved by the surrounding `white-space:
 * pre-wrap` styling, not by this function. */
export function renderMathText(text: string): string {
  let out = "";
  let i = 0;
  let plainStart = 0;
  const flushPlain = (end: number) => {
    if (end > plainStart) {
      out += escapeHtml(text.slice(plainStart, end));
    }
  };
  while (i < text.length) {
    const ch = text[i];
    if (ch === "\\" && text[i + 1] === "$") {
      flushPlain(i);
      out += "$";
      i += 2;
      plainStart = i;
      continue;
    }
    if (ch === "$") {
      const display = text[i + 1] === "$";
      const closer = display ? "$$" : "$";
      const open = i + closer.length;
      const close = text.indexOf(closer, open);
      if (close === -1) {
        // Unterminated delimiter: treat the rest as plain text.
        i += 1;
        continue;
      }
      flushPlain(i);
      out += renderMathSegment(text.slice(open, close), display);
      i = close + closer.length;
      plainStart = i;
      continue;
    }
    i += 1;
  }
  flushPlain(text.length);
  return out;
}

/** Typeset one math segment (the text between the dollar delimiters). */
export function renderMathSegment(src: string, display = false): string {
  const cls = display ? "math display" : "math inline";
  try {
    return `<span class="${cls}">${new MathParser(src).renderAll()}</span>`;
  } catch {
    const raw = display ? `$$${src}$$` : `$${src}$`;
    return `<span class="${cls} unparsed">${escapeHtml(raw)}</span>`;
  }
}

class MathParser {
  private pos = 0;

  constructor(private readonly src: string) {}

  renderAll(): string {
    const out = this.renderSequence();
    if (this.pos < this.src.length) {
      throw new Error(`unbalanced '}' at ${this.pos}`);
    }
    return out;
  }

  /** Render atoms until end of input or an unconsumed '}'. */
  private renderSequence(): string {
    let out = "";
    while (this.pos < this.src.length && this.src[this.pos] !== "}") {
      out += this.renderWithScripts();
    }
    return out;
  }

  /** One atom plus any trailing ^/_ scripts attached to it. */
  private renderWithScripts(): string {
    let base = this.renderAtom();
    for (;;) {
      const ch = this.src[this.pos];
      if (ch === "^") {
        this.pos += 1;
        base += `<sup>${this.renderOperand()}</sup>`;
      } else if (ch === "_") {
        this.pos += 1;
        base += `<sub>${this.renderOperand()}</sub>`;
      } else {
        break;
      }
    }
    return base;
  }

  /** An operand position (after ^, _, \frac, ...): spaces are TeX
   * token separators there, never the operand itself. */
  private renderOperand(): string {
    while (this.src[this.pos] === " ") {
      this.pos += 1;
    }
    return this.renderAtom();
  }

  private renderAtom(): string {
    const ch = this.src[this.pos];
    if (ch === undefined) {
      throw new Error("missing operand");
    }
    if (ch === "{") {
      return this.renderGroup();
    }
    if (ch === "\\") {
      return this.renderCommand();
    }
    if (ch === "}" || ch === "^" || ch === "_") {
      throw new Error(`unexpected '${ch}'`);
    }
    this.pos += 1;
    return escapeHtml(ch);
  }

  private renderGroup(): string {
    this.pos += 1; // consume '{'
    const inner = this.renderSequence();
    if (this.src[this.pos] !== "}") {
      throw new Error("unbalanced '{'");
    }
    this.pos += 1;
    return inner;
  }

  /** Raw (unparsed) brace group, for textual arguments. */
  private readRawGroup(): string {
    while (this.src[this.pos] === " ") {
      this.pos += 1;
    }
    if (this.src[this.pos] !== "{") {
      const ch = this.src[this.pos];
      if (ch === undefined) {
        throw new Error("missing argument");
      }
      this.pos += 1;
      return ch;
    }
    let depth = 1;
    let body = "";
    this.pos += 1;
    while (this.pos < this.src.length) {
      const ch = this.src[this.pos] as string;
      if (ch === "{") {
        depth += 1;
      } else if (ch === "}") {
        depth -= 1;
        if (depth === 0) {
          this.pos += 1;
          return body;
        }
      }
      body += ch;
      this.pos += 1;
    }
    throw new Error("unbalanced '{'");
  }

  private renderCommand(): string {
    this.pos += 1; // consume backslash
    const first = this.src[this.pos];
    if (first === undefined) {
      throw new Error("dangling backslash");
    }
    if (!/[A-Za-z]/.test(first)) {
      this.pos += 1;
      if (first === "\\") {
        return "<br>";
      }
      if (first === "," || first === ";" || first === "!" || first === " ") {
        return " ";
      }
      return escapeHtml(first); // \{ \} \$ \% \& \# \_
    }
    let name = "";
    while (this.pos < this.src.length && /[A-Za-z]/.test(this.src[this.pos] as string)) {
      name += this.src[this.pos];
      this.pos += 1;
    }
    switch (name) {
      case "frac":
      case "dfrac":
      case "tfrac": {
        const num = this.renderOperand();
        const den = this.renderOperand();
        return (
          `<span class="mfrac"><span class="mnum">${num}</span>` +
          `<span class="mden">${den}</span></span>`
        );
      }
      case "sqrt": {
        const radicand = this.renderOperand();
        return (
          `<span class="msqrt"><span class="mrad">√</span>` +
          `<span class="mroot">${radicand}</span></span>`
        );
      }
      case "boxed":
        return `<span class="mboxed">${this.renderOperand()}</span>`;
      case "text":
      case "textrm":
      case "mathrm":
      case "operatorname":
        return `<span class="mtext">${escapeHtml(this.readRawGroup())}</span>`;
      case "mathbb": {
        const body = this.readRawGroup();
        const known = BLACKBOARD[body];
        return known ?? `<span class="mbb">${escapeHtml(body)}</span>`;
      }
      case "left":
      case "right": {
        let delim = this.src[this.pos];
        if (delim === undefined) {
          throw new Error("missing delimiter");
        }
        this.pos += 1;
        if (delim === "\\") {
          delim = this.src[this.pos];
          if (delim === undefined) {
            throw new Error("missing delimiter");
          }
          this.pos += 1;
        }
        return delim === "." ? "" : escapeHtml(delim);
      }
      default: {
        const symbol = SYMBOLS[name];
        if (symbol !== undefined) {
          return escapeHtml(symbol);
        }
        // Unknown command: keep it visible rather than guessing.
        return `<span class="mcmd">${escapeHtml(`\\${name}`)}</span>`;
      }
    }
  }
}
