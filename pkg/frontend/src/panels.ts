// Side panels: events, rules, jobs, and the per-link job share view.
// Small hand-rolled DOM; each panel renders into its container and
// surfaces API failures inline rather than going blank.

import { select } from "d3";
import type { ApiClient } from "./api.js";
import type {
  BreakdownPayload,
  EventRow,
  JobPayload,
  RulePayload,
} from "./types.js";

function formatValue(value: number | number[]): string {
  if (Array.isArray(value)) {
    return value.map((v) => v.toFixed(2)).join(" / ");
  }
  return typeof value === "number" && !Number.isInteger(value)
    ? value.toFixed(4) : String(value);
}

export function renderEventsPanel(
  container: HTMLElement,
  events: EventRow[],
  opts: { onSelectLink?: (link: number) => void } = {},
): void {
  container.innerHTML = "";
  const root = select(container).append("div").attr("class", "panel events-panel");
  root.append("h3").text("Events");
  if (!events.length) {
    root.append("p").attr("class", "empty-state").text("No events in range.");
    return;
  }
  const table = root.append("table").attr("class", "events-table");
  const head = table.append("thead").append("tr");
  for (const h of ["interval", "rule", "link", "value", "jobs", "detail"]) {
    head.append("th").text(h);
  }
  const body = table.append("tbody");
  for (const ev of events) {
    const tr = body.append("tr").attr("data-event-id", ev.id);
    tr.append("td").text(ev.interval);
    tr.append("td").text(ev.rule);
    tr.append("td").append("a")
      .attr("href", "#")
      .attr("class", "link-ref")
      .text(ev.subject)
      .on("click", (e) => {
        e.preventDefault();
        opts.onSelectLink?.(ev.subject);
      });
    tr.append("td").attr("class", "event-value").text(formatValue(ev.value));
    tr.append("td").text(ev.jobs.join(","));
    tr.append("td").attr("class", "event-detail").text(ev.detail);
  }
}

export function renderJobsPanel(
  container: HTMLElement,
  jobs: JobPayload[],
  opts: { onViewTopology?: (jobId: number) => void } = {},
): void {
  container.innerHTML = "";
  const root = select(container).append("div").attr("class", "panel jobs-panel");
  root.append("h3").text("Jobs");
  if (!jobs.length) {
    root.append("p").attr("class", "empty-state").text("No jobs known.");
    return;
  }
  const list = root.append("ul").attr("class", "jobs-list");
  for (const job of jobs) {
    const li = list.append("li").attr("data-job-id", job.id);
    li.append("span").attr("class", "job-title")
      .text(`job ${job.id} (${job.source}) ` +
        `intervals ${job.first_interval}-${job.last_interval}`);
    li.append("span").attr("class", "job-nodes")
      .text(" " + job.hostnames.join(", "));
    li.append("button")
      .attr("class", "view-topology")
      .text("view topology")
      .on("click", () => opts.onViewTopology?.(job.id));
  }
}

const RULE_METRICS = [
  "LinkUtilization", "MpiLustreCoexist", "BytesSent", "BytesReceived",
  "SymbolErrors", "LinkDowned", "PortRcvErrors", "XmtDiscards",
];

export function renderRulesPanel(
  container: HTMLElement,
  rules: RulePayload[],
  api: Pick<ApiClient, "createRule" | "deleteRule">,
  onChange: () => void,
): void {
  container.innerHTML = "";
  const root = select(container).append("div").attr("class", "panel rules-panel");
  root.append("h3").text("Notification rules");
  const list = root.append("ul").attr("class", "rules-list");
  for (const rule of rules) {
    const li = list.append("li").attr("data-rule-id", rule.id);
    li.append("span").text(
      `#${rule.id} ${rule.metric} ${rule.comparator} ${rule.threshold} ` +
      `on ${rule.scope}` + (rule.period > 1 ? ` every ${rule.period}` : ""));
    li.append("button").attr("class", "delete-rule").text("delete")
      .on("click", async () => {
        try {
          await api.deleteRule(rule.id);
          onChange();
        } catch (err) {
          showPanelError(container, err);
        }
      });
  }

  const form = root.append("form").attr("class", "rule-form");
  const metric = form.append("select").attr("name", "metric");
  for (const m of RULE_METRICS) metric.append("option").attr("value", m).text(m);
  const comparator = form.append("select").attr("name", "comparator");
  for (const c of ["exceeds", "drops_below", "equals"]) {
    comparator.append("option").attr("value", c).text(c);
  }
  form.append("input")
    .attr("name", "threshold").attr("type", "number")
    .attr("step", "any").attr("placeholder", "threshold").attr("required", "");
  form.append("input")
    .attr("name", "scope").attr("placeholder", "all | links:1,2 | job:3")
    .property("value", "all");
  form.append("input")
    .attr("name", "period").attr("type", "number")
    .attr("min", "1").property("value", "1");
  form.append("button").attr("type", "submit").text("add rule");
  form.on("submit", async (ev) => {
    ev.preventDefault();
    const el = form.node() as HTMLFormElement;
    const data = new FormData(el);
    try {
      await api.createRule({
        metric: String(data.get("metric")),
        comparator: String(data.get("comparator")),
        threshold: Number(data.get("threshold")),
        scope: String(data.get("scope") || "all"),
        period: Number(data.get("period") || 1),
      });
      onChange();
    } catch (err) {
      showPanelError(container, err);
    }
  });
}

function showPanelError(container: HTMLElement, err: unknown): void {
  let box = container.querySelector(".panel-error") as HTMLElement | null;
  if (!box) {
    box = document.createElement("p");
    box.className = "panel-error";
    container.querySelector(".panel")?.appendChild(box);
  }
  box.textContent = err instanceof Error ? err.message : String(err);
}

// Link share view: one link, per-job byte shares stacked over time.
// Bar heights scale linearly against the busiest interval; the numbers
// in the tooltip are the payload's raw per-job byte fields.

const SHARE_COLORS = ["#4e79a7", "#e15759", "#59a14f", "#f28e2b", "#b07aa1"];

export function renderLinkSharePanel(
  container: HTMLElement,
  breakdown: BreakdownPayload,
  opts: { direction?: "a2b" | "b2a"; width?: number; height?: number } = {},
): string[] {
  const direction = opts.direction ?? "a2b";
  const width = opts.width ?? 420;
  const height = opts.height ?? 160;
  container.innerHTML = "";
  const root = select(container).append("div")
    .attr("class", "panel link-share-panel");
  root.append("h3").text(`Link ${breakdown.link} job shares (${direction})`);

  const jobIds = new Set<string>();
  for (const row of breakdown.intervals) {
    for (const j of Object.keys(row[direction].jobs)) jobIds.add(j);
  }
  const series = [...jobIds].sort((a, b) => Number(a) - Number(b));
  if (!series.length) {
    root.append("p").attr("class", "empty-state")
      .text("No attributed job traffic on this link.");
    return [];
  }

  let peak = 0;
  for (const row of breakdown.intervals) {
    let total = 0;
    for (const j of series) {
      const share = row[direction].jobs[j];
      if (share) total += share.mpi + share.io;
    }
    peak = Math.max(peak, total);
  }

  const svg = root.append("svg")
    .attr("class", "share-chart")
    .attr("viewBox", `0 0 ${width} ${height}`)
    .attr("width", width);
  const slot = width / Math.max(breakdown.intervals.length, 1);
  const barWidth = Math.max(slot - 6, 2);
  breakdown.intervals.forEach((row, i) => {
    let yTop = height;
    series.forEach((j, si) => {
      const share = row[direction].jobs[j];
      if (!share) return;
      const bytes = share.mpi + share.io;
      if (bytes <= 0 || peak <= 0) return;
      const h = (bytes / peak) * (height - 14);
      yTop -= h;
      svg.append("rect")
        .attr("class", "share-segment")
        .attr("data-job", j)
        .attr("data-interval", row.interval)
        .attr("x", i * slot + 3)
        .attr("y", yTop)
        .attr("width", barWidth)
        .attr("height", h)
        .attr("fill", SHARE_COLORS[si % SHARE_COLORS.length])
        .append("title")
        .text(`interval ${row.interval} job ${j}: ` +
          `mpi ${share.mpi} io ${share.io}`);
    });
    svg.append("text")
      .attr("class", "share-tick")
      .attr("x", i * slot + slot / 2)
      .attr("y", height - 2)
      .attr("text-anchor", "middle")
      .text(row.interval);
  });

  const legend = root.append("div").attr("class", "share-legend");
  series.forEach((j, si) => {
    legend.append("span")
      .attr("class", "legend-chip")
      .style("background", SHARE_COLORS[si % SHARE_COLORS.length])
      .text(`job ${j}`);
  });
  return series;
}
