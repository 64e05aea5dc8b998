// Pure HTML-string renderers. All dynamic text passes through escapeHtml;
// citation anchors are emitted only for ids present in the response payload.

import type { CompareReport, PaperSummary, ReviewOutline, SearchHit } from "./api.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

// Replace [Sn] markers with anchors to the cited chunk. Markers whose index
// falls outside the citations list stay as plain escaped text.
export function renderMessageHtml(text: string, citations: string[]): string {
  const escaped = escapeHtml(text);
  return escaped.replace(/\[S(\d+)\]/g, (marker, num) => {
    const idx = parseInt(num, 10) - 1;
    if (idx < 0 || idx >= citations.length) return marker;
    const chunkId = escapeHtml(citations[idx]);
    return `<a class="citation" href="#chunk-${chunkId}" data-chunk="${chunkId}">${marker}</a>`;
  });
}

export function renderPaperList(papers: PaperSummary[], selected: Set<string>): string {
  const rows = papers.map((p) => {
    const checked = selected.has(p.doc_id) ? " checked" : "";
    const year = p.year === null ? "" : String(p.year);
    return (
      `<li><label><input type="checkbox" data-doc="${escapeHtml(p.doc_id)}"${checked}>` +
      ` ${escapeHtml(p.title)} <span class="meta">${escapeHtml(p.authors.join(", "))}` +
      ` ${escapeHtml(year)}</span></label></li>`
    );
  });
  return `<ul class="papers">${rows.join("")}</ul>`;
}

export function renderSearchHits(hits: SearchHit[]): string {
  const rows = hits.map(
    (h) =>
      `<li><span class="score">${h.score.toFixed(4)}</span> ` +
      `${escapeHtml(h.snippet)}</li>`,
  );
  return `<ol class="hits">${rows.join("")}</ol>`;
}

// Per-paper cards plus the comparative table, rows aligned to per_paper order.
export function renderCompareReport(report: CompareReport): string {
  const cards = report.per_paper.map(
    (p) =>
      `<div class="card"><h3>${escapeHtml(p.title)}</h3>` +
      `<p>${escapeHtml(p.abstract)}</p>` +
      `<ul>${p.contributions.map((c) => `<li>${escapeHtml(c)}</li>`).join("")}</ul></div>`,
  );
  const rows = report.table.map(
    (row, i) =>
      `<tr><td>${escapeHtml(report.per_paper[i]?.title ?? "")}</td>` +
      `<td>${escapeHtml(row.approach)}</td><td>${escapeHtml(row.advantages)}</td></tr>`,
  );
  const lists =
    `<h4>Similarities</h4><ul>${report.similarities
      .map((s) => `<li>${escapeHtml(s)}</li>`)
      .join("")}</ul>` +
    `<h4>Differences</h4><ul>${report.differences
      .map((s) => `<li>${escapeHtml(s)}</li>`)
      .join("")}</ul>`;
  return (
    `<div class="compare">${cards.join("")}` +
    `<table><thead><tr><th>Paper</th><th>Approach</th><th>Advantages</th></tr></thead>` +
    `<tbody>${rows.join("")}</tbody></table>${lists}</div>`
  );
}

export function renderReview(outline: ReviewOutline): string {
  const sections = outline.body_sections.map(
    (s) => `<h3>${escapeHtml(s.heading)}</h3><p>${escapeHtml(s.text)}</p>`,
  );
  const refs = outline.bibliography.map(
    (b) => `<li value="${b.ref_number}">${escapeHtml(b.citation)}</li>`,
  );
  return (
    `<article class="review"><h2>${escapeHtml(outline.title)}</h2>` +
    `<p>${escapeHtml(outline.introduction)}</p>${sections.join("")}` +
    `<h3>Conclusion</h3><p>${escapeHtml(outline.conclusion)}</p>` +
    `<h3>References</h3><ol>${refs.join("")}</ol></article>`
  );
}

export function renderNotice(message: string, retryable: boolean): string {
  const retry = retryable ? `<button class="retry">Retry</button>` : "";
  return `<div class="notice">${escapeHtml(message)}${retry}</div>`;
}
