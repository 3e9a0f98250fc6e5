import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { Api, ScorePair } from "../src/api.js";
import { quantizeScore, Session, SessionState } from "../src/session.js";

interface RestoreCall {
  scores: ScorePair;
  resolve: (blob: Blob) => void;
  reject: (err: Error) => void;
}

/** Api double whose restore promises resolve only when the test says so. */
function makeFakeApi(scoreResult: ScorePair = { s_n: 0.42, s_b: 0.7 }) {
  const restoreCalls: RestoreCall[] = [];
  const heldScores: Array<() => void> = [];
  let held = false;
  let scoreCount = 0;

  const api: Api = {
    async health() {
      return { status: "ok", checkpoint_hash: "h1", config_hash: "c1" };
    },
    score() {
      scoreCount += 1;
      return new Promise((resolve) => {
        const finish = () => resolve({ ...scoreResult });
        if (held) heldScores.push(finish);
        else finish();
      });
    },
    restore(_image, scores) {
      return new Promise<Blob>((resolve, reject) => {
        restoreCalls.push({ scores: { ...scores }, resolve, reject });
      });
    },
  };
  return {
    api,
    restoreCalls,
    scoreCalls: () => scoreCount,
    holdScore() {
      held = true;
    },
    releaseScore() {
      held = false;
      heldScores.splice(0).forEach((fn) => fn());
    },
  };
}

const image = () => new Blob(["fake-png"], { type: "image/png" });
const blobOf = (tag: string) => new Blob([tag], { type: "image/png" });

describe("Session", () => {
  beforeEach(() => {
    vi.useFakeTimers();
  });
  afterEach(() => {
    vi.useRealTimers();
  });

  async function settle() {
    await vi.runAllTimersAsync();
  }

  it("prefills both sliders with the clamped /score estimates on upload", async () => {
    const fake = makeFakeApi({ s_n: 1.7, s_b: -0.2 });
    const session = new Session(fake.api);
    await session.upload(image());
    const state = session.getState();
    expect(state.phase).toBe("ready");
    expect(state.estimated).toEqual({ s_n: 1, s_b: 0 });
    expect(state.sliders).toEqual({ s_n: 1, s_b: 0 });
  });

  it("triggers an initial /restore after scoring", async () => {
    const fake = makeFakeApi({ s_n: 0.3, s_b: 0.6 });
    const session = new Session(fake.api);
    await session.upload(image());
    expect(fake.restoreCalls.length).toBe(1);
    expect(fake.restoreCalls[0].scores).toEqual({ s_n: 0.3, s_b: 0.6 });
  });

  it("never issues /restore before /score completes", async () => {
    const fake = makeFakeApi();
    fake.holdScore();
    const session = new Session(fake.api);
    const uploading = session.upload(image());
    session.setSlider("noise", 0.9);
    session.setSlider("blur", 0.1);
    await settle();
    expect(fake.restoreCalls.length).toBe(0); // score still pending
    fake.releaseScore();
    await uploading;
    expect(fake.scoreCalls()).toBe(1);
    expect(fake.restoreCalls.length).toBe(1);
  });

  it("a drag fires exactly one debounced restore", async () => {
    const fake = makeFakeApi();
    const session = new Session(fake.api, { debounceMs: 150 });
    await session.upload(image());
    fake.restoreCalls[0].resolve(blobOf("initial"));
    await flushMicro();

    for (const v of [0.1, 0.2, 0.3, 0.4, 0.5]) {
      session.setSlider("noise", v);
      await vi.advanceTimersByTimeAsync(50); // keep dragging inside the window
    }
    expect(fake.restoreCalls.length).toBe(1); // nothing new yet
    await vi.advanceTimersByTimeAsync(160); // release: debounce expires
    expect(fake.restoreCalls.length).toBe(2);
    expect(fake.restoreCalls[1].scores.s_n).toBe(0.5);
  });

  it("stale responses never overwrite newer ones", async () => {
    const fake = makeFakeApi();
    const session = new Session(fake.api, { debounceMs: 10 });
    await session.upload(image());
    const first = fake.restoreCalls[0]; // slow response, kept pending

    session.setSlider("blur", 0.9);
    await vi.advanceTimersByTimeAsync(20);
    const second = fake.restoreCalls[1];
    second.resolve(blobOf("new"));
    await flushMicro();
    const afterSecond = session.getState().restored;
    expect(afterSecond).not.toBeNull();

    first.resolve(blobOf("old")); // delayed first response arrives late
    await flushMicro();
    expect(session.getState().restored).toBe(afterSecond); // unchanged
  });

  it("reset returns the sliders to the /score values and restores", async () => {
    const fake = makeFakeApi({ s_n: 0.25, s_b: 0.75 });
    const session = new Session(fake.api, { debounceMs: 10 });
    await session.upload(image());
    session.setSlider("noise", 0.99);
    session.setSlider("blur", 0.01);
    await vi.advanceTimersByTimeAsync(20);
    session.reset();
    expect(session.getState().sliders).toEqual({ s_n: 0.25, s_b: 0.75 });
    await vi.advanceTimersByTimeAsync(20);
    const last = fake.restoreCalls[fake.restoreCalls.length - 1];
    expect(last.scores).toEqual({ s_n: 0.25, s_b: 0.75 });
  });

  it("clamps and quantizes every score sent on the wire", async () => {
    expect(quantizeScore(1.7)).toBe(1);
    expect(quantizeScore(-3)).toBe(0);
    expect(quantizeScore(0.123456)).toBe(0.12);
    expect(quantizeScore(0.005)).toBe(0.01);

    const fake = makeFakeApi();
    const session = new Session(fake.api, { debounceMs: 10 });
    await session.upload(image());
    session.setSlider("noise", 0.98765);
    await vi.advanceTimersByTimeAsync(20);
    const last = fake.restoreCalls[fake.restoreCalls.length - 1];
    expect(last.scores.s_n).toBe(0.99);
  });

  it("reports service failures through the banner callback without corrupting state", async () => {
    const errors: string[] = [];
    const fake = makeFakeApi();
    const session = new Session(fake.api, {
      debounceMs: 10,
      onError: (m) => errors.push(m),
    });
    await session.upload(image());
    fake.restoreCalls[0].reject(new Error("service error 503"));
    await flushMicro();
    expect(errors).toContain("service error 503");
    expect(session.getState().phase).toBe("ready");
    expect(session.getState().inFlight).toBe(false);

    // the session still works afterwards
    session.setSlider("noise", 0.5);
    await vi.advanceTimersByTimeAsync(20);
    expect(fake.restoreCalls.length).toBe(2);
  });
});

async function flushMicro() {
  for (let i = 0; i < 5; i++) await Promise.resolve();
}
