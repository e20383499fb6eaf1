// Read-only inspector: seed-command store, fact table with verification
// badges, and a first-try learning sparkline from /metrics. Teaching
// happens only through the chat, never from here.

import type { GrounderApi } from "./api.js";
import type { FactRow, MetricRecord, SeedCommandRow } from "./types.js";

export async function refreshInspector(
  container: HTMLElement,
  api: GrounderApi,
): Promise<void> {
  const [seedCommands, facts, metrics] = await Promise.all([
    api.seedCommands(),
    api.facts(),
    api.metrics(),
  ]);
  renderInspector(container, seedCommands, facts, metrics.records);
}

export function renderInspector(
  container: HTMLElement,
  seedCommands: SeedCommandRow[],
  facts: FactRow[],
  records: MetricRecord[],
): void {
  container.innerHTML = "";

  const commands = document.createElement("section");
  commands.className = "inspector-commands";
  commands.appendChild(heading(`seed commands (${seedCommands.length})`));
  const commandList = document.createElement("ul");
  for (const sc of seedCommands) {
    const item = document.createElement("li");
    item.dataset.scId = String(sc.id);
    item.dataset.pattern = sc.pattern;
    item.textContent = `${sc.pattern} → ${sc.action}`;
    const badge = document.createElement("span");
    badge.className = `badge ${sc.provenance}`;
    badge.textContent = sc.provenance === "learned" ? `learned from ${sc.user}` : "built-in";
    item.appendChild(badge);
    commandList.appendChild(item);
  }
  commands.appendChild(commandList);
  container.appendChild(commands);

  const knowledge = document.createElement("section");
  knowledge.className = "inspector-facts";
  knowledge.appendChild(heading(`facts (${facts.length})`));
  const factList = document.createElement("ul");
  for (const fact of facts) {
    const item = document.createElement("li");
    item.dataset.factId = String(fact.id);
    item.textContent = fact.text;
    const badge = document.createElement("span");
    badge.className = `badge ${fact.status}`;
    badge.textContent =
      fact.status === "unverified"
        ? `unverified +${fact.yesVotes}/-${fact.noVotes}`
        : fact.status;
    item.appendChild(badge);
    factList.appendChild(item);
  }
  knowledge.appendChild(factList);
  container.appendChild(knowledge);

  const curve = document.createElement("section");
  curve.className = "inspector-curve";
  curve.appendChild(heading(`tasks (${records.length})`));
  curve.appendChild(sparkline(records));
  container.appendChild(curve);
}

function heading(text: string): HTMLElement {
  const h = document.createElement("h3");
  h.textContent = text;
  return h;
}

function sparkline(records: MetricRecord[], width = 220, height = 36): SVGElement {
  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("width", String(width));
  svg.setAttribute("height", String(height));
  svg.setAttribute("class", "sparkline");
  if (records.length === 0) return svg;
  const step = width / Math.max(records.length, 1);
  const points = records.map((record, i) => {
    const x = i * step + step / 2;
    const y = record.first_try ? 4 : height - 4;
    return `${x.toFixed(1)},${y.toFixed(1)}`;
  });
  const line = document.createElementNS("http://www.w3.org/2000/svg", "polyline");
  line.setAttribute("points", points.join(" "));
  line.setAttribute("fill", "none");
  line.setAttribute("stroke", "currentColor");
  svg.appendChild(line);
  return svg;
}
