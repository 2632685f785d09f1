// Read-only metrics dashboard: tables plus CSS bar charts rendered from
// the metrics endpoints. No computation happens here.

import { NepkitApi } from "./api.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function table(header: string[], rows: (string | number)[][]): HTMLTableElement {
  const root = el("table", "metric-table");
  const head = root.createTHead().insertRow();
  for (const cell of header) head.appendChild(el("th", undefined, cell));
  const body = root.createTBody();
  for (const row of rows) {
    const tr = body.insertRow();
    for (const cell of row) tr.insertCell().textContent = String(cell);
  }
  return root;
}

function real(value: number | null): string {
  return value === null ? "-" : value.toFixed(4);
}

export class Dashboard {
  constructor(
    private readonly root: HTMLElement,
    private readonly api: NepkitApi,
  ) {}

  async render(apN = 5, minPresorted?: number): Promise<void> {
    this.root.textContent = "";
    this.root.appendChild(el("h2", undefined, "Service metrics"));
    try {
      await this.renderStats();
      await this.renderPrecision(apN, minPresorted);
      await this.renderDurations();
      await this.renderCorrelations();
    } catch (err) {
      this.root.appendChild(el("div", "error-banner", String(err)));
    }
  }

  private async renderStats(): Promise<void> {
    const stats = await this.api.stats();
    const section = el("section", "stats-section");
    section.appendChild(el("h3", undefined, "Totals"));
    section.appendChild(
      table(
        ["reports", "subscriptions", "avg subscriptions", "avg nep-all size", "avg issue size", "presorted"],
        [
          [
            stats.report_count,
            stats.subscription_total,
            real(stats.avg_subscriptions),
            real(stats.avg_nep_all_size),
            real(stats.avg_issue_size),
            real(stats.presorted_fraction),
          ],
        ],
      ),
    );
    this.root.appendChild(section);
  }

  private async renderPrecision(n: number, minPresorted?: number): Promise<void> {
    const ap = await this.api.metricsAp(n, minPresorted);
    const rsl = await this.api.metricsRsl(minPresorted);
    const section = el("section", "precision-section");
    section.appendChild(el("h3", undefined, `Presorting quality (AP@${ap.n}, RSL)`));
    const codes = Object.keys(ap.per_report).sort();
    const rows = codes.map((code) => [
      code,
      real(ap.per_report[code] ?? null),
      real(rsl.per_report[code] ?? null),
    ]);
    rows.push(["TOTAL", real(ap.overall), real(rsl.overall)]);
    section.appendChild(table(["report", `ap@${ap.n}`, "rsl"], rows));
    this.root.appendChild(section);
  }

  private async renderDurations(): Promise<void> {
    const durations = await this.api.metricsDurations();
    const section = el("section", "durations-section");
    section.appendChild(
      el("h3", undefined, `Editing durations (${durations.chunk_minutes}-minute bins)`),
    );
    const chart = el("div", "histogram");
    const entries = Object.entries(durations.histogram.bins)
      .map(([index, count]) => [Number(index), count] as const)
      .sort((a, b) => a[0] - b[0]);
    const peak = Math.max(1, ...entries.map(([, count]) => count));
    for (const [index, count] of entries) {
      const row = el("div", "histogram-row");
      row.appendChild(
        el("span", "histogram-label", `${index * durations.histogram.chunk_minutes}m`),
      );
      const bar = el("div", "histogram-bar");
      bar.style.width = `${(count / peak) * 100}%`;
      bar.title = `${count} issues`;
      row.appendChild(bar);
      row.appendChild(el("span", "histogram-count", String(count)));
      chart.appendChild(row);
    }
    section.appendChild(chart);
    if (durations.total) {
      section.appendChild(
        el(
          "p",
          "durations-total",
          `${durations.total.valid_sessions} of ${durations.total.sessions} sessions ` +
            `finished within ${durations.threshold_minutes} minutes ` +
            `(fraction ${real(durations.total.valid_fraction)}).`,
        ),
      );
    }
    this.root.appendChild(section);
  }

  private async renderCorrelations(): Promise<void> {
    const correlations = await this.api.metricsCorrelations().catch(() => []);
    if (correlations.length === 0) return;
    const section = el("section", "correlations-section");
    section.appendChild(el("h3", undefined, "Report-level correlations"));
    section.appendChild(
      table(
        ["pair", "coefficient", "samples"],
        correlations.map((c) => [c.label, real(c.coefficient), c.sample_size]),
      ),
    );
    this.root.appendChild(section);
  }
}
