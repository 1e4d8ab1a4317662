/** SVG node-link renderer bound to a GraphViewModel. */

import { computeLayout } from './layout';
import type { GraphViewModel, NodeView } from './state';

const SVG_NS = 'http://www.w3.org/2000/svg';

const STEP_PALETTE = [
  '#4e79a7', '#f28e2b', '#e15759', '#76b7b2', '#59a14f',
  '#edc948', '#b07aa1', '#ff9da7', '#9c755f', '#bab0ac',
];

export function stepColor(step: number): string {
  return STEP_PALETTE[step % STEP_PALETTE.length];
}

export interface RenderOptions {
  width: number;
  height: number;
  colorByStep: boolean;
  onSelect?: (node: NodeView) => void;
  /** Re-run layout; otherwise remembered positions are reused (metric
   * switches rebind size without moving anything). */
  relayout?: boolean;
}

export function renderGraph(svg: SVGSVGElement, model: GraphViewModel, options: RenderOptions): void {
  const doc = svg.ownerDocument;
  while (svg.firstChild) svg.removeChild(svg.firstChild);
  svg.setAttribute('viewBox', `0 0 ${options.width} ${options.height}`);

  if (model.empty) {
    const text = doc.createElementNS(SVG_NS, 'text');
    text.setAttribute('x', String(options.width / 2));
    text.setAttribute('y', String(options.height / 2));
    text.setAttribute('text-anchor', 'middle');
    text.setAttribute('class', 'placeholder');
    text.textContent = 'No graph yet — run a step to grow the garden.';
    svg.appendChild(text);
    return;
  }

  const nodes = model.nodes();
  const edges = model.edges();
  const needLayout = options.relayout || nodes.some((n) => n.x === undefined);
  if (needLayout) {
    const { positions } = computeLayout(nodes, edges, options.width, options.height);
    for (const node of nodes) {
      const pos = positions.get(node.id)!;
      node.x = pos.x;
      node.y = pos.y;
      model.rememberPosition(node.id, pos.x, pos.y);
    }
  }
  const at = new Map(nodes.map((n) => [n.id, n]));

  const edgeGroup = doc.createElementNS(SVG_NS, 'g');
  edgeGroup.setAttribute('class', 'edges');
  for (const edge of edges) {
    const a = at.get(edge.source)!;
    const b = at.get(edge.target)!;
    const line = doc.createElementNS(SVG_NS, 'line');
    line.setAttribute('x1', String(a.x));
    line.setAttribute('y1', String(a.y));
    line.setAttribute('x2', String(b.x));
    line.setAttribute('y2', String(b.y));
    line.setAttribute('class', 'edge');
    const title = doc.createElementNS(SVG_NS, 'title');
    title.textContent = `${a.display} -[${edge.relation}]-> ${b.display}`;
    line.appendChild(title);
    edgeGroup.appendChild(line);
  }
  svg.appendChild(edgeGroup);

  const nodeGroup = doc.createElementNS(SVG_NS, 'g');
  nodeGroup.setAttribute('class', 'nodes');
  for (const node of nodes) {
    const circle = doc.createElementNS(SVG_NS, 'circle');
    circle.setAttribute('cx', String(node.x));
    circle.setAttribute('cy', String(node.y));
    circle.setAttribute('r', String(node.radius));
    circle.setAttribute('data-id', node.id);
    circle.setAttribute(
      'fill',
      options.colorByStep ? stepColor(Math.min(...node.steps)) : '#4e79a7',
    );
    circle.setAttribute('class', 'node');
    const title = doc.createElementNS(SVG_NS, 'title');
    title.textContent = model.hoverText(node);
    circle.appendChild(title);
    if (options.onSelect) circle.addEventListener('click', () => options.onSelect!(node));
    nodeGroup.appendChild(circle);

    const label = doc.createElementNS(SVG_NS, 'text');
    label.setAttribute('x', String((node.x ?? 0) + node.radius + 2));
    label.setAttribute('y', String((node.y ?? 0) + 3));
    label.setAttribute('class', 'node-label');
    label.textContent = node.display;
    nodeGroup.appendChild(label);
  }
  svg.appendChild(nodeGroup);
}
