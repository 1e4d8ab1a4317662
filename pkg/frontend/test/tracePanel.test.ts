import { describe, expect, it } from 'vitest';

import { panelSections } from '../src/tracePanel';
import { computeLayout } from '../src/layout';
import type { StepPayload } from '../src/types';

function step(): StepPayload {
  return {
    index: 1,
    prompt: 'Relate music and fracture.',
    prompt_source: 'human',
    final_answer: 'A final synthesis.',
    subgraph_nodes: 3,
    subgraph_edges: 2,
    records: [
      {
        index: 0,
        thinking: 'raw thinking text',
        sections: {
          'Knowledge Graph': '1. **Music** -[RELATES-TO]-> **Fracture**',
          'Abstract Pattern': 'α → β',
          'Reasoning Steps': '1. Think.\n2. Conclude.',
          Hypothesis: '"Music cracks glass."',
        },
        triples: [
          { subject: 'Music', relation: 'RELATES-TO', object: 'Fracture', note: null },
          { subject: 'Fracture', relation: 'INFLUENCES', object: 'Sound', note: 'e.g., ring' },
        ],
        pattern: {
          states: [
            { symbol: 'α', binding: 'Music' },
            { symbol: 'β', binding: null },
          ],
          relations: [
            { kind: 'ARROW', lhs: ['α'], rhs: ['β'], conditional: [] },
            {
              kind: 'ARROW',
              lhs: ['β'],
              rhs: ['α'],
              conditional: [{ kind: 'ARROW', lhs: ['α'], rhs: ['β'] }],
            },
          ],
          context: 'Context paragraph.',
        },
        critique: null,
        final_answer: 'A final synthesis.',
      },
    ],
  };
}

describe('trace panel sections', () => {
  it('maps one-to-one onto the trace sections', () => {
    const titles = panelSections(step()).map((s) => s.title);
    expect(titles).toEqual([
      'Prompt (human)',
      'Thinking',
      'Knowledge Graph',
      'Abstract Pattern',
      'Reasoning Steps',
      'Hypothesis',
      'Final Answer',
    ]);
  });

  it('renders triples with notes and conditional pattern rules', () => {
    const sections = panelSections(step());
    const graph = sections.find((s) => s.title === 'Knowledge Graph')!;
    expect(graph.body).toContain('Music -[RELATES-TO]-> Fracture');
    expect(graph.body).toContain('(e.g., ring)');
    const pattern = sections.find((s) => s.title === 'Abstract Pattern')!;
    expect(pattern.body).toContain('α → β');
    expect(pattern.body).toContain('If α → β then β → α');
    expect(pattern.body).toContain('α = Music');
    expect(pattern.body).toContain('Context paragraph.');
  });

  it('opens the prompt and final answer by default, collapses the rest', () => {
    const sections = panelSections(step());
    expect(sections.find((s) => s.title === 'Prompt (human)')!.open).toBe(true);
    expect(sections.find((s) => s.title === 'Final Answer')!.open).toBe(true);
    expect(sections.find((s) => s.title === 'Thinking')!.open).toBe(false);
  });

  it('prefixes rounds when a step holds several refinement records', () => {
    const payload = step();
    payload.records.push({ ...payload.records[0], index: 1, critique: 'Needs depth.' });
    const titles = panelSections(payload).map((s) => s.title);
    expect(titles).toContain('Round 0: Thinking');
    expect(titles).toContain('Round 1: Critique');
  });
});

describe('force layout', () => {
  it('is deterministic and yields finite positions', () => {
    const nodes = [
      { id: 'a', display: 'A', metricValue: 1, radius: 5, steps: [0] },
      { id: 'b', display: 'B', metricValue: 1, radius: 5, steps: [0] },
      { id: 'c', display: 'C', metricValue: 1, radius: 5, steps: [0] },
    ];
    const edges = [
      { source: 'a', target: 'b', relation: 'R', steps: [0] },
      { source: 'b', target: 'c', relation: 'R', steps: [0] },
    ];
    const first = computeLayout(nodes, edges, 600, 400);
    const second = computeLayout(
      nodes.map((n) => ({ ...n, x: undefined, y: undefined })),
      edges,
      600,
      400,
    );
    for (const id of ['a', 'b', 'c']) {
      const p = first.positions.get(id)!;
      expect(Number.isFinite(p.x) && Number.isFinite(p.y)).toBe(true);
      expect(second.positions.get(id)).toEqual(p);
    }
  });
});
