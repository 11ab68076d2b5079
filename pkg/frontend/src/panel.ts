// Side panel: connection status, objective and per-pair residual readout,
// and the alpha / human_scale sliders (debounced set_params; the UI shows
// acknowledged values only and reverts rejected edits).

import type { JointStateMsg, ParamsPayload } from "./protocol.js";

// ORDERED_PAIRS on the service side is (1,2),(1,3),(1,4),(2,1),... in
// lexicographic order; labels follow the same order.
const ORDERED_LABELS = [
  "palm→thumb", "palm→index", "palm→middle",
  "thumb→palm", "thumb→index", "thumb→middle",
  "index→palm", "index→thumb", "index→middle",
  "middle→palm", "middle→thumb", "middle→index",
];

export interface PanelCallbacks {
  onAlpha(value: number): void;
  onHumanScale(value: number): void;
  onReconnect(): void;
}

export class Panel {
  private statusEl: HTMLElement;
  private objectiveEl: HTMLElement;
  private solveEl: HTMLElement;
  private residualCells: HTMLElement[] = [];
  private alphaSlider: HTMLInputElement;
  private alphaLabel: HTMLElement;
  private scaleSlider: HTMLInputElement;
  private scaleLabel: HTMLElement;
  private toastEl: HTMLElement;
  private ackedAlpha = 0.01;
  private ackedScale = 1.0;

  constructor(root: HTMLElement, private readonly callbacks: PanelCallbacks) {
    root.innerHTML = `
      <h1>hand retargeting playground</h1>
      <div class="status" data-role="status">connecting…</div>
      <button data-role="reconnect">reconnect</button>
      <div class="metrics">
        <div>objective: <span data-role="objective">—</span></div>
        <div>solve: <span data-role="solve">—</span></div>
      </div>
      <h2>smoothing α <span data-role="alpha-label"></span></h2>
      <input data-role="alpha" type="range" min="-6" max="2" step="0.05" value="-2">
      <h2>human scale <span data-role="scale-label"></span></h2>
      <input data-role="scale" type="range" min="0.5" max="2.0" step="0.05" value="1.0">
      <h2>TSV residuals [mm]</h2>
      <table class="residuals"><tbody data-role="residuals"></tbody></table>
      <div class="toast" data-role="toast"></div>
      <p class="hint">drag the colored spheres; drag empty space to orbit,
      wheel to zoom. rotation is not retargeted (task-space vectors ignore
      orientation).</p>
    `;
    this.statusEl = root.querySelector('[data-role="status"]')!;
    this.objectiveEl = root.querySelector('[data-role="objective"]')!;
    this.solveEl = root.querySelector('[data-role="solve"]')!;
    this.alphaSlider = root.querySelector('[data-role="alpha"]')!;
    this.alphaLabel = root.querySelector('[data-role="alpha-label"]')!;
    this.scaleSlider = root.querySelector('[data-role="scale"]')!;
    this.scaleLabel = root.querySelector('[data-role="scale-label"]')!;
    this.toastEl = root.querySelector('[data-role="toast"]')!;
    const tbody = root.querySelector('[data-role="residuals"]')!;
    for (const label of ORDERED_LABELS) {
      const row = document.createElement("tr");
      const name = document.createElement("td");
      name.textContent = label;
      const value = document.createElement("td");
      value.textContent = "—";
      row.append(name, value);
      tbody.append(row);
      this.residualCells.push(value);
    }
    this.alphaSlider.addEventListener("input", () => {
      const alpha = 10 ** Number(this.alphaSlider.value);
      this.alphaLabel.textContent = alpha.toExponential(1);
      this.callbacks.onAlpha(alpha);
    });
    this.scaleSlider.addEventListener("input", () => {
      const scale = Number(this.scaleSlider.value);
      this.scaleLabel.textContent = scale.toFixed(2);
      this.callbacks.onHumanScale(scale);
    });
    root.querySelector('[data-role="reconnect"]')!.addEventListener("click", () => callbacks.onReconnect());
  }

  setStatus(text: string, ok: boolean): void {
    this.statusEl.textContent = text;
    this.statusEl.className = ok ? "status ok" : "status bad";
  }

  showState(msg: JointStateMsg): void {
    this.objectiveEl.textContent = msg.objective.toExponential(3) + (msg.converged ? "" : " (not converged)");
    this.solveEl.textContent = `${(msg.solve_micros / 1000).toFixed(2)} ms` + (msg.dropped ? ` (+${msg.dropped} dropped)` : "");
    msg.residuals.forEach((r, i) => {
      this.residualCells[i].textContent = (r * 1000).toFixed(2);
    });
  }

  /** Only acknowledged parameter values stick; sliders snap back otherwise. */
  applyAck(params: ParamsPayload): void {
    this.ackedAlpha = params.alpha;
    this.ackedScale = params.human_scale;
    this.alphaSlider.value = String(Math.log10(Math.max(params.alpha, 1e-6)));
    this.alphaLabel.textContent = params.alpha.toExponential(1);
    this.scaleSlider.value = String(params.human_scale);
    this.scaleLabel.textContent = params.human_scale.toFixed(2);
  }

  revertWithToast(message: string): void {
    this.toast(message);
    this.applyAck({
      alpha: this.ackedAlpha,
      human_scale: this.ackedScale,
      max_iters: 0,
      grad_tol: 0,
      step_tol: 0,
      fd_step: 0,
    } as ParamsPayload);
  }

  toast(message: string): void {
    this.toastEl.textContent = message;
    this.toastEl.classList.add("visible");
    setTimeout(() => this.toastEl.classList.remove("visible"), 2500);
  }
}
