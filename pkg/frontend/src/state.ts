/**
 * Graph view-model: which metric drives node size, which growth steps are
 * visible, and the node/edge lists derived from the last server payload.
 * Pure data transforms; the server payload is never edited.
 */

import type { GraphEdge, GraphNode, GraphPayload, MetricName } from './types';

export interface NodeView {
  id: string;
  display: string;
  metricValue: number;
  radius: number;
  steps: number[];
  x?: number;
  y?: number;
}

export interface EdgeView {
  source: string;
  target: string;
  relation: string;
  steps: number[];
}

const MIN_RADIUS = 4;
const MAX_RADIUS = 22;

export class GraphViewModel {
  private payload: GraphPayload = { nodes: [], edges: [] };
  metric: MetricName = 'degree';
  /** Visible step indices; null means every step. */
  stepFilter: Set<number> | null = null;
  private positions = new Map<string, { x: number; y: number }>();

  /** Replace the underlying data (after a fetch); keeps known positions. */
  setPayload(payload: GraphPayload): void {
    this.payload = payload;
  }

  get raw(): GraphPayload {
    return this.payload;
  }

  get empty(): boolean {
    return this.payload.nodes.length === 0;
  }

  setMetric(metric: MetricName): void {
    this.metric = metric;
  }

  setStepFilter(steps: number[] | null): void {
    this.stepFilter = steps === null ? null : new Set(steps);
  }

  rememberPosition(id: string, x: number, y: number): void {
    this.positions.set(id, { x, y });
  }

  private visible(steps: number[]): boolean {
    if (this.stepFilter === null) return true;
    return steps.some((s) => this.stepFilter!.has(s));
  }

  /** Nodes carrying at least one visible StepRef, sized by the metric. */
  nodes(): NodeView[] {
    const values = this.payload.nodes.map((n) => n.metrics[this.metric] ?? 0);
    const max = Math.max(...values, 0);
    return this.payload.nodes
      .filter((n) => this.visible(n.steps))
      .map((n) => {
        const value = n.metrics[this.metric] ?? 0;
        const scale = max > 0 ? value / max : 0;
        const pos = this.positions.get(n.id);
        return {
          id: n.id,
          display: n.display,
          metricValue: value,
          radius: MIN_RADIUS + scale * (MAX_RADIUS - MIN_RADIUS),
          steps: n.steps,
          x: pos?.x,
          y: pos?.y,
        };
      });
  }

  /** Edges whose endpoints are both visible and that carry a visible step. */
  edges(): EdgeView[] {
    const shown = new Set(this.nodes().map((n) => n.id));
    return this.payload.edges
      .filter((e) => this.visible(e.steps) && shown.has(e.source) && shown.has(e.target))
      .map((e) => ({ source: e.source, target: e.target, relation: e.relation, steps: e.steps }));
  }

  hoverText(node: NodeView): string {
    return `${node.display} — ${this.metric}: ${node.metricValue.toPrecision(4)}`;
  }
}

/** Distinct originating steps present in a payload, for the filter control. */
export function stepsPresent(payload: GraphPayload): number[] {
  const steps = new Set<number>();
  for (const node of payload.nodes) node.steps.forEach((s) => steps.add(s));
  for (const edge of payload.edges) edge.steps.forEach((s) => steps.add(s));
  return [...steps].sort((a, b) => a - b);
}

export function sameGraph(a: GraphPayload, b: GraphPayload): boolean {
  return JSON.stringify(a) === JSON.stringify(b);
}

export function filterSubgraph(payload: GraphPayload, step: number): GraphPayload {
  const nodes: GraphNode[] = payload.nodes.filter((n) => n.steps.includes(step));
  const keep = new Set(nodes.map((n) => n.id));
  const edges: GraphEdge[] = payload.edges.filter(
    (e) => e.steps.includes(step) && keep.has(e.source) && keep.has(e.target),
  );
  return { nodes, edges };
}
