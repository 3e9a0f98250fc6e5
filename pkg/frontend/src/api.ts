/** Client for the inference service: /health, /score, /restore. */

export interface ScorePair {
  s_n: number;
  s_b: number;
}

export interface HealthInfo {
  status: string;
  checkpoint_hash: string;
  config_hash: string;
}

export interface Api {
  health(): Promise<HealthInfo>;
  score(image: Blob): Promise<ScorePair>;
  restore(image: Blob, scores: ScorePair): Promise<Blob>;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function fail(res: Response): Promise<never> {
  let detail = `${res.status}`;
  try {
    const body = await res.json();
    if (body && body.error) detail = `${res.status}: ${body.error}`;
  } catch {
    /* non-JSON error body */
  }
  throw new ApiError(res.status, `service error ${detail}`);
}

export function createApi(baseUrl: string, fetchImpl: typeof fetch = fetch): Api {
  const base = baseUrl.replace(/\/+$/, "");
  return {
    async health() {
      const res = await fetchImpl(`${base}/health`);
      if (!res.ok) return fail(res);
      return res.json();
    },

    async score(image: Blob) {
      const form = new FormData();
      form.append("image", image, "upload.png");
      const res = await fetchImpl(`${base}/score`, { method: "POST", body: form });
      if (!res.ok) return fail(res);
      return res.json();
    },

    async restore(image: Blob, scores: ScorePair) {
      const form = new FormData();
      form.append("image", image, "upload.png");
      form.append("scores", JSON.stringify(scores));
      const res = await fetchImpl(`${base}/restore`, { method: "POST", body: form });
      if (!res.ok) return fail(res);
      return res.blob();
    },
  };
}
