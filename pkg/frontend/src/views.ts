/** Pure HTML renderers for session state and results.
 *
 * Rendering is a pure function of the service payloads: no stroke math
 * happens here, and every number in the markup comes from a payload field.
 */

import { renderOverlay, renderPie, type TraceSeries } from './charts.js';
import type { AnalysisDoc, GraphsDoc, SessionStatusDoc } from './types.js';

export const MAX_PLOTTED_STROKES = 8;

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

export function renderStatusBanner(status: SessionStatusDoc): string {
  if (status.status === 'failed') {
    const stage = escapeHtml(status.error?.stage ?? 'unknown stage');
    const message = escapeHtml(status.error?.message ?? '');
    return `<div class="banner banner-error" role="alert">Processing failed at <strong>${stage}</strong>: ${message}</div>`;
  }
  if (status.status === 'processing') {
    return `<div class="banner banner-info">Analyzing your session&hellip;</div>`;
  }
  return `<div class="banner banner-ok">Analysis ready.</div>`;
}

export function renderInlineError(message: string): string {
  return `<div class="banner banner-error" role="alert">${escapeHtml(message)}</div>`;
}

function renderFeedbackPanel(feedback: string | null): string {
  if (feedback) {
    return `<section class="feedback"><h3>Coach feedback</h3><p>${escapeHtml(feedback)}</p></section>`;
  }
  return [
    `<section class="feedback">`,
    `<h3>Coach feedback</h3>`,
    `<button type="button" data-action="generate-feedback">Generate feedback</button>`,
    `</section>`,
  ].join('\n');
}

function renderRejectionSummary(analysis: AnalysisDoc): string {
  return (
    `<p class="rejections">${analysis.accepted_strokes} strokes analyzed, ` +
    `${analysis.rejected_strokes} rejected during segmentation.</p>`
  );
}

function overlaySections(graphs: GraphsDoc): string[] {
  const strokes = graphs.strokes.slice(0, MAX_PLOTTED_STROKES);
  const channels = Object.keys(graphs.reference.traces);
  return channels.map((channel) => {
    const series: TraceSeries[] = strokes
      .filter((s) => channel in s.traces)
      .map((s) => ({
        name: `stroke ${s.stroke}`,
        values: s.traces[channel] ?? [],
        className: 'trace-user',
      }));
    series.push({
      name: 'reference',
      values: graphs.reference.traces[channel] ?? [],
      className: 'trace-reference',
    });
    return renderOverlay(channel, series);
  });
}

/**
 * The full results view: per-phase and overall pies, stroke-vs-reference
 * overlays, the feedback panel, and the rejection summary.  A malformed
 * payload renders a diagnostic panel instead of throwing.
 */
export function renderResults(analysis: AnalysisDoc, graphs: GraphsDoc): string {
  try {
    const pies = [
      renderPie('overall', analysis.overall_percent),
      ...Object.entries(analysis.per_phase_percent)
        .sort(([a], [b]) => a.localeCompare(b))
        .map(([phase, pct]) => renderPie(phase, pct)),
    ];
    return [
      `<div class="results">`,
      `<section class="pies">`,
      ...pies,
      `</section>`,
      `<section class="overlays">`,
      `<h3>Selected strokes vs reference</h3>`,
      ...overlaySections(graphs),
      `</section>`,
      renderFeedbackPanel(analysis.feedback),
      renderRejectionSummary(analysis),
      `</div>`,
    ].join('\n');
  } catch (error) {
    const detail = error instanceof Error ? error.message : String(error);
    return `<div class="diagnostic" role="alert">Could not render the analysis payload: ${escapeHtml(detail)}</div>`;
  }
}
