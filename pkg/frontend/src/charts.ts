/** Pure SVG chart builders.
 *
 * Everything here is presentation geometry: the only numbers printed into
 * the markup as text are values taken verbatim from service payloads.
 */

export interface PieSlice {
  label: string;
  value: number;
}

/**
 * Two-slice breakdown for an optimal percentage.  Slice values always sum
 * to 100; only the optimal share (the payload number) is rendered as text.
 */
export function pieSlices(optimalPercent: number): PieSlice[] {
  return [
    { label: 'optimal', value: optimalPercent },
    { label: 'suboptimal', value: 100 - optimalPercent },
  ];
}

const PIE_COLORS: Record<string, string> = {
  optimal: '#2f9e44',
  suboptimal: '#e8590c',
};

function polar(cx: number, cy: number, r: number, angleDeg: number): [number, number] {
  const rad = ((angleDeg - 90) * Math.PI) / 180;
  return [cx + r * Math.cos(rad), cy + r * Math.sin(rad)];
}

function arcPath(cx: number, cy: number, r: number, start: number, end: number): string {
  const [x0, y0] = polar(cx, cy, r, start);
  const [x1, y1] = polar(cx, cy, r, end);
  const large = end - start > 180 ? 1 : 0;
  return `M ${cx} ${cy} L ${x0.toFixed(2)} ${y0.toFixed(2)} A ${r} ${r} 0 ${large} 1 ${x1.toFixed(2)} ${y1.toFixed(2)} Z`;
}

/** A labelled pie; the caption shows the payload percentage verbatim. */
export function renderPie(title: string, optimalPercent: number): string {
  const slices = pieSlices(optimalPercent);
  const size = 120;
  const c = size / 2;
  const r = c - 4;
  let angle = 0;
  const paths: string[] = [];
  for (const slice of slices) {
    const sweep = (slice.value / 100) * 360;
    if (sweep <= 0) {
      continue;
    }
    const color = PIE_COLORS[slice.label] ?? '#888';
    if (sweep >= 360) {
      paths.push(`<circle cx="${c}" cy="${c}" r="${r}" fill="${color}" data-slice="${slice.label}"/>`);
    } else {
      paths.push(
        `<path d="${arcPath(c, c, r, angle, angle + sweep)}" fill="${color}" data-slice="${slice.label}"/>`,
      );
    }
    angle += sweep;
  }
  return [
    `<figure class="pie" data-chart="${title}">`,
    `<svg viewBox="0 0 ${size} ${size}" role="img" aria-label="${title}">`,
    ...paths,
    `</svg>`,
    `<figcaption>${title}: <strong>${optimalPercent}%</strong> optimal</figcaption>`,
    `</figure>`,
  ].join('\n');
}

export interface TraceSeries {
  name: string;
  values: number[];
  className: string;
}

/**
 * Overlayed polylines for one channel, scaled into a fixed viewBox.  The
 * vertical scale spans the min/max across all series so user strokes and
 * the reference stroke share axes.
 */
export function renderOverlay(channel: string, series: TraceSeries[]): string {
  const width = 320;
  const height = 120;
  const drawable = series.filter((s) => s.values.length > 1);
  if (drawable.length === 0) {
    return `<figure class="overlay" data-channel="${channel}"><p>no trace data</p></figure>`;
  }
  let lo = Infinity;
  let hi = -Infinity;
  for (const s of drawable) {
    for (const v of s.values) {
      lo = Math.min(lo, v);
      hi = Math.max(hi, v);
    }
  }
  const span = hi - lo || 1;
  const lines = drawable.map((s) => {
    const points = s.values
      .map((v, i) => {
        const x = (i / (s.values.length - 1)) * width;
        const y = height - ((v - lo) / span) * height;
        return `${x.toFixed(1)},${y.toFixed(1)}`;
      })
      .join(' ');
    return `<polyline class="${s.className}" data-series="${s.name}" fill="none" points="${points}"/>`;
  });
  return [
    `<figure class="overlay" data-channel="${channel}">`,
    `<svg viewBox="0 0 ${width} ${height}" role="img" aria-label="${channel}">`,
    ...lines,
    `</svg>`,
    `<figcaption>${channel}</figcaption>`,
    `</figure>`,
  ].join('\n');
}
