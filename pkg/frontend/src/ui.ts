/** DOM wiring: file input, the two sliders, side-by-side view, error
 * banner, health line, and the comparison grid. All state decisions
 * live in Session/compareGrid; this layer only renders. */

import { Api, ScorePair } from "./api.js";
import { compareGrid, GridCell } from "./grid.js";
import { Session, SessionState } from "./session.js";

export function mountApp(root: HTMLElement, api: Api): Session {
  root.innerHTML = `
    <div class="banner" hidden></div>
    <div class="health"></div>
    <div class="controls">
      <input type="file" class="upload" accept="image/png,image/jpeg" />
      <label>noise score S<sub>n</sub>
        <input type="range" class="slider-noise" min="0" max="1" step="0.01" value="0" disabled />
        <span class="value-noise">0.00</span>
      </label>
      <label>blur score S<sub>b</sub>
        <input type="range" class="slider-blur" min="0" max="1" step="0.01" value="0" disabled />
        <span class="value-blur">0.00</span>
      </label>
      <button class="reset" disabled>reset to estimates</button>
      <button class="grid-btn" disabled>3x3 compare grid</button>
      <span class="busy" hidden>working&hellip;</span>
    </div>
    <div class="compare">
      <figure><img class="input-view" alt="input (bicubic x4)" /><figcaption>input, bicubic x4</figcaption></figure>
      <figure><img class="output-view" alt="restored" /><figcaption>restored</figcaption></figure>
    </div>
    <div class="grid"></div>
  `;

  const $ = <T extends HTMLElement>(sel: string) => root.querySelector(sel) as T;
  const banner = $<HTMLDivElement>(".banner");
  const health = $<HTMLDivElement>(".health");
  const upload = $<HTMLInputElement>(".upload");
  const noiseSlider = $<HTMLInputElement>(".slider-noise");
  const blurSlider = $<HTMLInputElement>(".slider-blur");
  const noiseValue = $<HTMLSpanElement>(".value-noise");
  const blurValue = $<HTMLSpanElement>(".value-blur");
  const resetBtn = $<HTMLButtonElement>(".reset");
  const gridBtn = $<HTMLButtonElement>(".grid-btn");
  const busy = $<HTMLSpanElement>(".busy");
  const inputView = $<HTMLImageElement>(".input-view");
  const outputView = $<HTMLImageElement>(".output-view");
  const gridBox = $<HTMLDivElement>(".grid");

  let outputUrl: string | null = null;

  function render(state: SessionState): void {
    noiseSlider.value = String(state.sliders.s_n);
    blurSlider.value = String(state.sliders.s_b);
    noiseValue.textContent = state.sliders.s_n.toFixed(2);
    blurValue.textContent = state.sliders.s_b.toFixed(2);
    const ready = state.phase === "ready";
    noiseSlider.disabled = blurSlider.disabled = !ready;
    resetBtn.disabled = gridBtn.disabled = !ready;
    busy.hidden = !state.inFlight && state.phase !== "scoring";
    if (state.restored) {
      if (outputUrl) URL.revokeObjectURL(outputUrl);
      outputUrl = URL.createObjectURL(state.restored);
      outputView.src = outputUrl;
    }
    health.textContent = state.health
      ? `model ${state.health.checkpoint_hash} (config ${state.health.config_hash})`
      : "service unreachable";
  }

  function showError(message: string): void {
    banner.textContent = `${message} (click to dismiss)`;
    banner.hidden = false;
  }
  banner.addEventListener("click", () => {
    banner.hidden = true;
  });

  const session = new Session(api, { onChange: render, onError: showError });
  void session.refreshHealth();

  upload.addEventListener("change", () => {
    const file = upload.files?.[0];
    if (!file) return;
    inputView.src = URL.createObjectURL(file);
    gridBox.innerHTML = "";
    void session.upload(file);
  });

  noiseSlider.addEventListener("input", () =>
    session.setSlider("noise", Number(noiseSlider.value)));
  blurSlider.addEventListener("input", () =>
    session.setSlider("blur", Number(blurSlider.value)));
  resetBtn.addEventListener("click", () => session.reset());

  gridBtn.addEventListener("click", () => {
    const image = session.getState().image;
    if (!image) return;
    gridBox.innerHTML = "";
    const cellEls: HTMLElement[] = [];
    for (let i = 0; i < 9; i++) {
      const el = document.createElement("figure");
      el.className = "grid-cell";
      el.innerHTML = `<img alt="" /><figcaption></figcaption>`;
      gridBox.appendChild(el);
      cellEls.push(el);
    }
    void compareGrid(api, image, (index: number, cell: GridCell) => {
      const el = cellEls[index];
      (el.querySelector("figcaption") as HTMLElement).textContent = cell.label;
      if (cell.image) {
        const img = el.querySelector("img") as HTMLImageElement;
        img.src = URL.createObjectURL(cell.image);
        img.addEventListener("click", () => session.adoptScores(cell.scores));
      } else if (cell.error) {
        showError(cell.error);
      }
    });
  });

  return session;
}
