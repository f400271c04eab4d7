// Wire types mirroring the review service JSON. Geometry is in image
// pixels (keys suffixed _px), measurements in centimeters (_cm).

export interface PointPx {
  x_px: number;
  y_px: number;
}

export interface ScanlineJson {
  p1: PointPx;
  p2: PointPx;
}

export interface Measurements {
  ivs_cm: number;
  lvid_cm: number;
  lvpw_cm: number;
}

export interface ContourJson {
  lvid_pairs: [PointPx, PointPx][];
  basal_pairs: [PointPx, PointPx][];
  ere_px: (number | null)[][];
}

export interface LongAxisJson {
  point: PointPx;
  direction: PointPx;
}

export interface SessionView {
  study_id: string;
  phase: string;
  scanline: ScanlineJson;
  manual_override: boolean;
  measurements: Measurements;
  landmark_rows: number[];
  landmarks_px: PointPx[];
  contour: ContourJson | null;
  long_axis: LongAxisJson | null;
  amm: { rows: number; cols: number; sample_spacing_px: number };
  accepted: boolean;
}

export interface StudySummary {
  study_id: string;
  n_frames: number;
  height: number;
  width: number;
  pixel_spacing_cm_per_px: number;
  anchor_ed: number | null;
  anchor_es: number | null;
  has_truth: boolean;
  reviewed: Record<string, boolean>;
}

export type Phase = "ED" | "ES";

export interface XY {
  x: number;
  y: number;
}

export interface Scanline {
  p1: XY;
  p2: XY;
}

export function fromJsonPoint(p: PointPx): XY {
  return { x: p.x_px, y: p.y_px };
}

export function toJsonPoint(p: XY): PointPx {
  return { x_px: p.x, y_px: p.y };
}

export function fromJsonScanline(sl: ScanlineJson): Scanline {
  return { p1: fromJsonPoint(sl.p1), p2: fromJsonPoint(sl.p2) };
}

export function toJsonScanline(sl: Scanline): ScanlineJson {
  return { p1: toJsonPoint(sl.p1), p2: toJsonPoint(sl.p2) };
}
