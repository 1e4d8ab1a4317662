import { describe, expect, it } from 'vitest';

import { GraphViewModel, filterSubgraph, sameGraph, stepsPresent } from '../src/state';
import type { GraphPayload } from '../src/types';

function payload(): GraphPayload {
  const metrics = (degree: number, pagerank: number, bridging: number, prestige: number) => ({
    degree,
    pagerank,
    bridging,
    prestige,
  });
  return {
    nodes: [
      { id: 'music', display: 'Music', steps: [0, 1], metrics: metrics(3, 0.4, 0.1, 0.5) },
      { id: 'material', display: 'Material', steps: [0], metrics: metrics(2, 0.3, 0.9, 0.25) },
      { id: 'glass', display: 'Glass', steps: [1], metrics: metrics(1, 0.2, 0.4, 0.0) },
      { id: 'fracture', display: 'Fracture', steps: [2], metrics: metrics(1, 0.1, 0.2, 1.0) },
    ],
    edges: [
      { source: 'music', target: 'material', relation: 'RELATES-TO', note: null, steps: [0] },
      { source: 'music', target: 'glass', relation: 'INFLUENCES', note: null, steps: [1] },
      { source: 'fracture', target: 'music', relation: 'INFLUENCES', note: null, steps: [2] },
    ],
  };
}

describe('provenance filter fidelity', () => {
  it('shows exactly the nodes and edges carrying the selected step', () => {
    const model = new GraphViewModel();
    model.setPayload(payload());
    model.setStepFilter([0]);
    expect(model.nodes().map((n) => n.id).sort()).toEqual(['material', 'music']);
    expect(model.edges()).toEqual([
      { source: 'music', target: 'material', relation: 'RELATES-TO', steps: [0] },
    ]);
  });

  it('matches the server-side step filter exactly (server is source of truth)', () => {
    const fullView = payload();
    // what GET /graph?step=1 would return, derived by the same provenance rule
    const serverSide = filterSubgraph(fullView, 1);
    const model = new GraphViewModel();
    model.setPayload(fullView);
    model.setStepFilter([1]);
    expect(model.nodes().map((n) => n.id).sort()).toEqual(
      serverSide.nodes.map((n) => n.id).sort(),
    );
    expect(model.edges().map((e) => `${e.source}->${e.target}`).sort()).toEqual(
      serverSide.edges.map((e) => `${e.source}->${e.target}`).sort(),
    );
  });

  it('clearing the filter shows every element again', () => {
    const model = new GraphViewModel();
    model.setPayload(payload());
    model.setStepFilter([2]);
    expect(model.nodes()).toHaveLength(1);
    model.setStepFilter(null);
    expect(model.nodes()).toHaveLength(4);
    expect(model.edges()).toHaveLength(3);
  });

  it('drops edges whose endpoints are filtered out', () => {
    const model = new GraphViewModel();
    model.setPayload(payload());
    model.setStepFilter([2]);
    // the fracture->music edge carries step 2, but music does not
    expect(model.edges()).toEqual([]);
  });

  it('lists the steps present for the filter control', () => {
    expect(stepsPresent(payload())).toEqual([0, 1, 2]);
  });
});

describe('metric overlay switching', () => {
  it('supports all four overlay metrics and resizes accordingly', () => {
    const model = new GraphViewModel();
    model.setPayload(payload());
    for (const metric of ['degree', 'pagerank', 'bridging', 'prestige'] as const) {
      model.setMetric(metric);
      const byId = new Map(model.nodes().map((n) => [n.id, n]));
      const raw = new Map(payload().nodes.map((n) => [n.id, n.metrics[metric]]));
      // radius order mirrors metric order
      const ids = [...raw.keys()];
      ids.sort((a, b) => raw.get(a)! - raw.get(b)!);
      const radii = ids.map((id) => byId.get(id)!.radius);
      expect([...radii].sort((a, b) => a - b)).toEqual(radii);
      expect(byId.get('music')!.metricValue).toBe(raw.get('music'));
    }
  });

  it('rebinds sizes without discarding the computed layout', () => {
    const model = new GraphViewModel();
    model.setPayload(payload());
    model.rememberPosition('music', 10, 20);
    model.rememberPosition('material', 30, 40);
    model.setMetric('pagerank');
    const node = model.nodes().find((n) => n.id === 'music')!;
    expect([node.x, node.y]).toEqual([10, 20]);
  });

  it('never mutates the server payload', () => {
    const original = payload();
    const snapshot = JSON.parse(JSON.stringify(original));
    const model = new GraphViewModel();
    model.setPayload(original);
    model.setMetric('bridging');
    model.setStepFilter([0]);
    model.nodes();
    model.edges();
    expect(sameGraph(model.raw, snapshot)).toBe(true);
  });

  it('reports an empty model for the placeholder state', () => {
    const model = new GraphViewModel();
    expect(model.empty).toBe(true);
    model.setPayload(payload());
    expect(model.empty).toBe(false);
  });

  it('hover text carries the display label and metric value', () => {
    const model = new GraphViewModel();
    model.setPayload(payload());
    model.setMetric('prestige');
    const node = model.nodes().find((n) => n.id === 'fracture')!;
    expect(model.hoverText(node)).toBe('Fracture — prestige: 1.000');
  });
});
