/**
 * Minimal SVG assembly: scales and tagged primitives.  Elements carry
 * stable class names (curve, errbar, ref-h, ref-v, cell) so tests and
 * downstream tooling can count figure components.
 */

export interface Margin {
  top: number;
  right: number;
  bottom: number;
  left: number;
}

export const DEFAULT_MARGIN: Margin = { top: 30, right: 30, bottom: 48, left: 64 };

export type Scale = (v: number) => number;

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  return (v) => r0 + ((v - d0) / span) * (r1 - r0);
}

export function logScale(domain: [number, number], range: [number, number]): Scale {
  const lo = Math.log10(domain[0]);
  const hi = Math.log10(domain[1]);
  const lin = linearScale([lo, hi], range);
  return (v) => lin(Math.log10(v));
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

export class SvgScene {
  private parts: string[] = [];

  constructor(readonly width: number, readonly height: number) {}

  raw(fragment: string): void {
    this.parts.push(fragment);
  }

  polyline(points: Array<[number, number]>, opts: { cls: string; stroke: string; width?: number; dash?: string; data?: Record<string, string> }): void {
    const attr = points.map(([x, y]) => `${x.toFixed(2)},${y.toFixed(2)}`).join(" ");
    const dash = opts.dash ? ` stroke-dasharray="${opts.dash}"` : "";
    const data = Object.entries(opts.data ?? {})
      .map(([k, v]) => ` data-${k}="${esc(v)}"`)
      .join("");
    this.parts.push(
      `<polyline class="${opts.cls}" fill="none" stroke="${opts.stroke}" stroke-width="${opts.width ?? 2}"${dash}${data} points="${attr}"/>`,
    );
  }

  line(x1: number, y1: number, x2: number, y2: number, opts: { cls: string; stroke: string; width?: number; dash?: string; data?: Record<string, string> }): void {
    const dash = opts.dash ? ` stroke-dasharray="${opts.dash}"` : "";
    const data = Object.entries(opts.data ?? {})
      .map(([k, v]) => ` data-${k}="${esc(v)}"`)
      .join("");
    this.parts.push(
      `<line class="${opts.cls}" stroke="${opts.stroke}" stroke-width="${opts.width ?? 1.5}"${dash}${data} x1="${x1.toFixed(2)}" y1="${y1.toFixed(2)}" x2="${x2.toFixed(2)}" y2="${y2.toFixed(2)}"/>`,
    );
  }

  rect(x: number, y: number, w: number, h: number, fill: string, cls = "cell"): void {
    this.parts.push(
      `<rect class="${cls}" x="${x.toFixed(2)}" y="${y.toFixed(2)}" width="${w.toFixed(3)}" height="${h.toFixed(3)}" fill="${fill}"/>`,
    );
  }

  circle(x: number, y: number, r: number, fill: string, cls = "marker"): void {
    this.parts.push(`<circle class="${cls}" cx="${x.toFixed(2)}" cy="${y.toFixed(2)}" r="${r}" fill="${fill}"/>`);
  }

  text(x: number, y: number, content: string, opts: { cls?: string; size?: number; anchor?: string; fill?: string } = {}): void {
    this.parts.push(
      `<text class="${opts.cls ?? "label"}" x="${x.toFixed(2)}" y="${y.toFixed(2)}" font-size="${opts.size ?? 12}" text-anchor="${opts.anchor ?? "start"}" fill="${opts.fill ?? "#222"}" font-family="sans-serif">${esc(content)}</text>`,
    );
  }

  render(): string {
    return [
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">`,
      `<rect width="${this.width}" height="${this.height}" fill="white"/>`,
      ...this.parts,
      "</svg>",
    ].join("\n");
  }
}

/** Viridis-like ramp for heatmaps (coarse but monotone in luminance). */
export function colorRamp(t: number): string {
  const stops: Array<[number, number, number]> = [
    [68, 1, 84],
    [59, 82, 139],
    [33, 145, 140],
    [94, 201, 98],
    [253, 231, 37],
  ];
  const clamped = Math.min(1, Math.max(0, t));
  const pos = clamped * (stops.length - 1);
  const i = Math.min(stops.length - 2, Math.floor(pos));
  const f = pos - i;
  const mix = stops[i].map((c, k) => Math.round(c + f * (stops[i + 1][k] - c)));
  return `rgb(${mix[0]},${mix[1]},${mix[2]})`;
}

export function logTicks(lo: number, hi: number): number[] {
  const ticks: number[] = [];
  for (let e = Math.ceil(Math.log10(lo)); e <= Math.floor(Math.log10(hi)); e++) {
    ticks.push(10 ** e);
  }
  return ticks;
}
