/** The 3x3 comparison grid over score pairs {0, 0.5, 1}^2. */

import { Api, ScorePair } from "./api.js";

export const GRID_VALUES = [0, 0.5, 1] as const;

export interface GridCell {
  scores: ScorePair;
  label: string;
  image: Blob | null;
  error: string | null;
}

export function cellLabel(scores: ScorePair): string {
  return `Sₙ ${scores.s_n} / Sᵇ ${scores.s_b}`;
}

export function gridPairs(): ScorePair[] {
  const pairs: ScorePair[] = [];
  for (const s_n of GRID_VALUES) {
    for (const s_b of GRID_VALUES) {
      pairs.push({ s_n, s_b });
    }
  }
  return pairs;
}

/** Restore the image under all nine pairs, at most `concurrency` calls
 * in flight; cells resolve in place as responses land. */
export async function compareGrid(
  api: Api,
  image: Blob,
  onCell?: (index: number, cell: GridCell) => void,
  concurrency = 2,
): Promise<GridCell[]> {
  const pairs = gridPairs();
  const cells: GridCell[] = pairs.map((scores) => ({
    scores,
    label: cellLabel(scores),
    image: null,
    error: null,
  }));

  let next = 0;
  async function worker(): Promise<void> {
    while (next < pairs.length) {
      const index = next++;
      try {
        cells[index].image = await api.restore(image, pairs[index]);
      } catch (err) {
        cells[index].error = err instanceof Error ? err.message : String(err);
      }
      onCell?.(index, cells[index]);
    }
  }

  await Promise.all(Array.from({ length: Math.max(1, concurrency) }, worker));
  return cells;
}
