// Canvas tile painter. Colours derive from the vocabulary's sprite hashes
// (a fixed local palette) so the console never guesses game semantics;
// ids without a known hash render as labelled placeholders.

import { ViewState } from "./state.js";

export const TILE_PX = 28;

export function colorForHash(sha: string | undefined): string {
  if (!sha) return "#777777";
  return `#${sha.slice(0, 6)}`;
}

export function paintGrid(
  ctx: CanvasRenderingContext2D,
  view: ViewState,
  grid?: Uint8Array | null,
): void {
  const [height, width] = view.shape;
  const cells = grid ?? view.grid;
  ctx.canvas.width = width * TILE_PX;
  ctx.canvas.height = height * TILE_PX;
  ctx.font = `${TILE_PX * 0.5}px monospace`;
  ctx.textAlign = "center";
  ctx.textBaseline = "middle";
  for (let r = 0; r < height; r++) {
    for (let c = 0; c < width; c++) {
      const id = cells[r * width + c];
      const sha = view.sprites[String(id)];
      ctx.fillStyle = colorForHash(sha);
      ctx.fillRect(c * TILE_PX, r * TILE_PX, TILE_PX, TILE_PX);
      ctx.strokeStyle = "#00000033";
      ctx.strokeRect(c * TILE_PX, r * TILE_PX, TILE_PX, TILE_PX);
      if (!sha) {
        ctx.fillStyle = "#ffffff";
        ctx.fillText(`?${id}`, (c + 0.5) * TILE_PX, (r + 0.5) * TILE_PX);
      }
    }
  }
  if (view.agent) {
    const [ar, ac] = view.agent;
    ctx.strokeStyle = "#ffffff";
    ctx.lineWidth = 2;
    ctx.strokeRect(ac * TILE_PX + 2, ar * TILE_PX + 2, TILE_PX - 4, TILE_PX - 4);
    ctx.lineWidth = 1;
  }
}

export function paintPattern(
  ctx: CanvasRenderingContext2D,
  cells: [number, number, number][],
  sprites: Record<string, string>,
  tile = 14,
): void {
  const rows = cells.map(([dr]) => dr);
  const cols = cells.map(([, dc]) => dc);
  const r0 = Math.min(...rows);
  const c0 = Math.min(...cols);
  const h = Math.max(...rows) - r0 + 1;
  const w = Math.max(...cols) - c0 + 1;
  ctx.canvas.width = w * tile;
  ctx.canvas.height = h * tile;
  ctx.fillStyle = "#222222";
  ctx.fillRect(0, 0, w * tile, h * tile);
  for (const [dr, dc, id] of cells) {
    ctx.fillStyle = colorForHash(sprites[String(id)]);
    ctx.fillRect((dc - c0) * tile, (dr - r0) * tile, tile, tile);
    ctx.strokeStyle = "#00000055";
    ctx.strokeRect((dc - c0) * tile, (dr - r0) * tile, tile, tile);
  }
}
