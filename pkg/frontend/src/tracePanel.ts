/**
 * Collapsible trace panel for one growth step: thinking text, parsed triples,
 * abstract pattern, every named section, and the final answer, one
 * <details> block each — mirroring the trace's sections one-to-one.
 */

import type { StepPayload, TraceRecord } from './types';

export interface PanelSection {
  title: string;
  body: string;
  open: boolean;
}

function describePattern(pattern: NonNullable<TraceRecord['pattern']>): string {
  const lines: string[] = [];
  for (const rel of pattern.relations) {
    const token = rel.kind === 'PROPORTIONAL' ? '∝' : rel.kind === 'NOT-EQUAL' ? '≠' : '→';
    const body = `${rel.lhs.join(' ')} ${token} ${rel.rhs.join(' ')}`;
    if (rel.conditional.length > 0) {
      const clauses = rel.conditional
        .map((c) => `${c.lhs.join(' ')} → ${c.rhs.join(' ')}`)
        .join(' and ');
      lines.push(`If ${clauses} then ${body}`);
    } else {
      lines.push(body);
    }
  }
  for (const state of pattern.states) {
    if (state.binding) lines.push(`${state.symbol} = ${state.binding}`);
  }
  if (pattern.context) lines.push('', pattern.context);
  return lines.join('\n');
}

/** Flatten one step into ordered panel sections. */
export function panelSections(step: StepPayload): PanelSection[] {
  const sections: PanelSection[] = [
    { title: `Prompt (${step.prompt_source})`, body: step.prompt, open: true },
  ];
  for (const record of step.records) {
    const prefix = step.records.length > 1 ? `Round ${record.index}: ` : '';
    if (record.thinking !== null) {
      sections.push({ title: `${prefix}Thinking`, body: record.thinking, open: false });
    }
    if (record.triples.length > 0) {
      const triples = record.triples
        .map((t) => `${t.subject} -[${t.relation}]-> ${t.object}${t.note ? ` (${t.note})` : ''}`)
        .join('\n');
      sections.push({ title: `${prefix}Knowledge Graph`, body: triples, open: false });
    }
    if (record.pattern) {
      sections.push({
        title: `${prefix}Abstract Pattern`,
        body: describePattern(record.pattern),
        open: false,
      });
    }
    for (const [heading, body] of Object.entries(record.sections)) {
      const lower = heading.toLowerCase();
      if (lower === 'knowledge graph' || lower === 'abstract pattern') continue;
      sections.push({ title: `${prefix}${heading}`, body, open: false });
    }
    if (record.critique) {
      sections.push({ title: `${prefix}Critique`, body: record.critique, open: false });
    }
  }
  sections.push({ title: 'Final Answer', body: step.final_answer, open: true });
  return sections;
}

export function renderTracePanel(container: HTMLElement, step: StepPayload): void {
  const doc = container.ownerDocument;
  container.replaceChildren();
  const header = doc.createElement('h3');
  header.textContent = `Step ${step.index} — ${step.subgraph_nodes} nodes / ${step.subgraph_edges} edges`;
  container.appendChild(header);
  for (const section of panelSections(step)) {
    const details = doc.createElement('details');
    if (section.open) details.setAttribute('open', '');
    const summary = doc.createElement('summary');
    summary.textContent = section.title;
    const pre = doc.createElement('pre');
    pre.textContent = section.body;
    details.appendChild(summary);
    details.appendChild(pre);
    container.appendChild(details);
  }
}
