// Screen <-> image coordinate mapping. One uniform scale plus an offset;
// overlays stay registered to the image at any zoom or canvas size.

import type { XY } from "./types.js";

export interface ViewTransform {
  scale: number;
  offsetX: number;
  offsetY: number;
}

export function imageToScreen(p: XY, t: ViewTransform): XY {
  return { x: p.x * t.scale + t.offsetX, y: p.y * t.scale + t.offsetY };
}

export function screenToImage(p: XY, t: ViewTransform): XY {
  return { x: (p.x - t.offsetX) / t.scale, y: (p.y - t.offsetY) / t.scale };
}

/** Letterbox-fit an image into a canvas, then apply a zoom factor.
 *
 * At zoom 1 the whole image is visible and centered; larger zooms scale
 * about the canvas center.
 */
export function fitTransform(
  imageWidth: number,
  imageHeight: number,
  canvasWidth: number,
  canvasHeight: number,
  zoom = 1,
): ViewTransform {
  const base = Math.min(canvasWidth / imageWidth, canvasHeight / imageHeight);
  const scale = base * zoom;
  return {
    scale,
    offsetX: (canvasWidth - imageWidth * scale) / 2,
    offsetY: (canvasHeight - imageHeight * scale) / 2,
  };
}
