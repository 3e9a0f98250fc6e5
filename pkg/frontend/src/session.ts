/** The interactive-modulation state machine.
 *
 * Upload -> /score prefills both sliders with the estimated degradation
 * scores and triggers an initial /restore. Slider drags issue debounced
 * /restore calls; responses carry sequence numbers so a stale (slower)
 * response can never overwrite a newer image. No /restore is ever
 * issued for a new image before its /score has completed.
 */

import { Api, HealthInfo, ScorePair } from "./api.js";
import { debounce, Debounced } from "./debounce.js";

export type Axis = "noise" | "blur";
export type Phase = "empty" | "scoring" | "ready";

export interface SessionState {
  phase: Phase;
  image: Blob | null;
  estimated: ScorePair | null;
  sliders: ScorePair;
  restored: Blob | null;
  inFlight: boolean;
  health: HealthInfo | null;
}

export interface SessionOptions {
  debounceMs?: number;
  onChange?: (state: SessionState) => void;
  onError?: (message: string) => void;
}

/** Clamp to [0,1] and quantize to the UI's 0.01 step. */
export function quantizeScore(v: number): number {
  const clamped = Math.min(1, Math.max(0, v));
  return Math.round(clamped * 100) / 100;
}

export class Session {
  private state: SessionState = {
    phase: "empty",
    image: null,
    estimated: null,
    sliders: { s_n: 0, s_b: 0 },
    restored: null,
    inFlight: false,
    health: null,
  };

  private seq = 0; // last issued restore sequence number
  private appliedSeq = 0; // newest response already rendered
  private generation = 0; // bumped per upload; discards stale scores
  private pending = 0;
  private debouncedRestore: Debounced<[]>;

  constructor(private api: Api, private opts: SessionOptions = {}) {
    this.debouncedRestore = debounce(() => {
      void this.issueRestore();
    }, opts.debounceMs ?? 150);
  }

  getState(): SessionState {
    return { ...this.state, sliders: { ...this.state.sliders } };
  }

  private emit(): void {
    this.opts.onChange?.(this.getState());
  }

  private error(message: string): void {
    this.opts.onError?.(message);
  }

  async refreshHealth(): Promise<void> {
    try {
      const previous = this.state.health?.checkpoint_hash;
      this.state.health = await this.api.health();
      if (previous && previous !== this.state.health.checkpoint_hash) {
        this.error("model checkpoint changed on the server");
      }
    } catch (err) {
      this.state.health = null;
      this.error(err instanceof Error ? err.message : String(err));
    }
    this.emit();
  }

  /** New image: score it, prefill sliders, then fire the first restore. */
  async upload(image: Blob): Promise<void> {
    const gen = ++this.generation;
    this.debouncedRestore.cancel();
    this.state = {
      ...this.state,
      phase: "scoring",
      image,
      estimated: null,
      restored: null,
    };
    this.emit();
    try {
      const raw = await this.api.score(image);
      if (gen !== this.generation) return; // superseded by a newer upload
      const estimated = { s_n: quantizeScore(raw.s_n), s_b: quantizeScore(raw.s_b) };
      this.state.estimated = estimated;
      this.state.sliders = { ...estimated };
      this.state.phase = "ready";
      this.emit();
      void this.issueRestore(); // triggered, not awaited

    } catch (err) {
      if (gen !== this.generation) return;
      this.state.phase = "empty";
      this.state.image = null;
      this.emit();
      this.error(err instanceof Error ? err.message : String(err));
    }
  }

  /** Move one slider; a debounced restore follows once the drag settles. */
  setSlider(axis: Axis, value: number): void {
    const v = quantizeScore(value);
    if (axis === "noise") this.state.sliders.s_n = v;
    else this.state.sliders.s_b = v;
    this.emit();
    if (this.state.phase === "ready") this.debouncedRestore();
  }

  /** Adopt an explicit pair (e.g. from a grid cell) and restore. */
  adoptScores(scores: ScorePair): void {
    this.state.sliders = { s_n: quantizeScore(scores.s_n), s_b: quantizeScore(scores.s_b) };
    this.emit();
    if (this.state.phase === "ready") void this.issueRestore();
  }

  /** Back to the UDEM estimates. */
  reset(): void {
    if (!this.state.estimated) return;
    this.state.sliders = { ...this.state.estimated };
    this.emit();
    if (this.state.phase === "ready") this.debouncedRestore();
  }

  private async issueRestore(): Promise<void> {
    if (this.state.phase !== "ready" || !this.state.image) return;
    const mySeq = ++this.seq;
    const image = this.state.image;
    const scores = { ...this.state.sliders };
    this.pending += 1;
    this.state.inFlight = true;
    this.emit();
    try {
      const blob = await this.api.restore(image, scores);
      if (mySeq > this.appliedSeq) {
        this.appliedSeq = mySeq;
        this.state.restored = blob;
      }
    } catch (err) {
      this.error(err instanceof Error ? err.message : String(err));
    } finally {
      this.pending -= 1;
      this.state.inFlight = this.pending > 0;
      this.emit();
    }
  }
}
