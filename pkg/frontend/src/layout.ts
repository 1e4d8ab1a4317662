/** Headless force-directed layout over the view model's nodes/edges. */

import {
  forceCenter,
  forceCollide,
  forceLink,
  forceManyBody,
  forceSimulation,
  type SimulationLinkDatum,
  type SimulationNodeDatum,
} from 'd3';

import type { EdgeView, NodeView } from './state';

interface SimNode extends SimulationNodeDatum {
  id: string;
}

export interface LayoutResult {
  positions: Map<string, { x: number; y: number }>;
}

/**
 * Runs the simulation to convergence synchronously (no animation frame
 * dependency) so layout also works under tests and in workers.
 */
export function computeLayout(
  nodes: NodeView[],
  edges: EdgeView[],
  width: number,
  height: number,
  ticks = 200,
): LayoutResult {
  const simNodes: SimNode[] = nodes.map((n) => ({ id: n.id, x: n.x, y: n.y }));
  const links: Array<SimulationLinkDatum<SimNode>> = edges.map((e) => ({
    source: e.source,
    target: e.target,
  }));
  const simulation = forceSimulation(simNodes)
    .force('charge', forceManyBody().strength(-120))
    .force('link', forceLink<SimNode, SimulationLinkDatum<SimNode>>(links).id((d) => d.id).distance(60))
    .force('center', forceCenter(width / 2, height / 2))
    .force('collide', forceCollide(16))
    .stop();
  for (let i = 0; i < ticks; i += 1) simulation.tick();
  const positions = new Map<string, { x: number; y: number }>();
  for (const node of simNodes) positions.set(node.id, { x: node.x ?? 0, y: node.y ?? 0 });
  return { positions };
}
