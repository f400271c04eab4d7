// Canvas overlay drawing. Pure pixels-in, pixels-out: every coordinate is
// mapped through the view transform so overlays stay registered to the
// image at any zoom.

import type { ViewTransform } from "./transform.js";
import { imageToScreen } from "./transform.js";
import type { SessionView, XY } from "./types.js";
import type { OverlayToggles } from "./state.js";
import type { Scanline } from "./types.js";
import { fromJsonPoint } from "./types.js";
import { midpoint } from "./state.js";

export const HANDLE_RADIUS = 6;
export const ROTATE_HANDLE_OFFSET = 24;

const COLORS = {
  contour: "#ff9c33",
  axis: "#7fdbca",
  scanline: "#4ea3ff",
  scanlineManual: "#ffd166",
  landmark: "#ff5470",
  handle: "#ffffff",
};

export function rotateHandlePosition(sl: Scanline): XY {
  const m = midpoint(sl);
  const dx = sl.p2.x - sl.p1.x;
  const dy = sl.p2.y - sl.p1.y;
  const len = Math.hypot(dx, dy) || 1;
  return {
    x: sl.p2.x + (dx / len) * ROTATE_HANDLE_OFFSET,
    y: sl.p2.y + (dy / len) * ROTATE_HANDLE_OFFSET,
  };
}

function dot(ctx: CanvasRenderingContext2D, p: XY, r: number, fill: string): void {
  ctx.beginPath();
  ctx.arc(p.x, p.y, r, 0, Math.PI * 2);
  ctx.fillStyle = fill;
  ctx.fill();
}

export function drawOverlays(
  ctx: CanvasRenderingContext2D,
  session: SessionView | null,
  scanline: Scanline | null,
  toggles: OverlayToggles,
  t: ViewTransform,
  manualOverride: boolean,
): void {
  if (session && toggles.contour && session.contour) {
    ctx.strokeStyle = COLORS.contour;
    ctx.fillStyle = COLORS.contour;
    for (const [septal, posterior] of session.contour.lvid_pairs.concat(
      session.contour.basal_pairs,
    )) {
      const a = imageToScreen(fromJsonPoint(septal), t);
      const b = imageToScreen(fromJsonPoint(posterior), t);
      dot(ctx, a, 2.5, COLORS.contour);
      dot(ctx, b, 2.5, COLORS.contour);
    }
  }

  if (session && toggles.axis && session.long_axis) {
    const point = fromJsonPoint(session.long_axis.point);
    const dir = fromJsonPoint(session.long_axis.direction);
    const a = imageToScreen({ x: point.x - dir.x * 1000, y: point.y - dir.y * 1000 }, t);
    const b = imageToScreen({ x: point.x + dir.x * 1000, y: point.y + dir.y * 1000 }, t);
    ctx.save();
    ctx.setLineDash([6, 6]);
    ctx.strokeStyle = COLORS.axis;
    ctx.lineWidth = 1;
    ctx.beginPath();
    ctx.moveTo(a.x, a.y);
    ctx.lineTo(b.x, b.y);
    ctx.stroke();
    ctx.restore();
  }

  if (scanline && toggles.scanline) {
    const a = imageToScreen(scanline.p1, t);
    const b = imageToScreen(scanline.p2, t);
    ctx.strokeStyle = manualOverride ? COLORS.scanlineManual : COLORS.scanline;
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(a.x, a.y);
    ctx.lineTo(b.x, b.y);
    ctx.stroke();
    dot(ctx, a, HANDLE_RADIUS - 2, COLORS.handle);
    dot(ctx, b, HANDLE_RADIUS - 2, COLORS.handle);
    const m = imageToScreen(midpoint(scanline), t);
    dot(ctx, m, HANDLE_RADIUS - 2, ctx.strokeStyle as string);
    const rot = imageToScreen(rotateHandlePosition(scanline), t);
    ctx.beginPath();
    ctx.arc(rot.x, rot.y, HANDLE_RADIUS - 2, 0, Math.PI * 2);
    ctx.strokeStyle = COLORS.handle;
    ctx.lineWidth = 1.5;
    ctx.stroke();
  }

  if (session && toggles.landmarks) {
    for (const landmark of session.landmarks_px) {
      const p = imageToScreen(fromJsonPoint(landmark), t);
      ctx.strokeStyle = COLORS.landmark;
      ctx.lineWidth = 1.5;
      ctx.beginPath();
      ctx.moveTo(p.x - 5, p.y);
      ctx.lineTo(p.x + 5, p.y);
      ctx.moveTo(p.x, p.y - 5);
      ctx.lineTo(p.x, p.y + 5);
      ctx.stroke();
    }
  }
}

/** Which scanline handle (if any) sits under a screen-space pointer. */
export function pickHandle(
  pointer: XY,
  scanline: Scanline | null,
  t: ViewTransform,
  radius = HANDLE_RADIUS + 4,
): "p1" | "p2" | "mid" | "rotate" | null {
  if (!scanline) return null;
  const candidates: Array<["p1" | "p2" | "mid" | "rotate", XY]> = [
    ["p1", scanline.p1],
    ["p2", scanline.p2],
    ["rotate", rotateHandlePosition(scanline)],
    ["mid", midpoint(scanline)],
  ];
  for (const [handle, image] of candidates) {
    const s = imageToScreen(image, t);
    if (Math.hypot(s.x - pointer.x, s.y - pointer.y) <= radius) return handle;
  }
  return null;
}
