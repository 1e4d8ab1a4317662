/** Payload shapes of the garden HTTP API. */

export type SessionStatus = 'idle' | 'generating' | 'error';

export type MetricName = 'degree' | 'pagerank' | 'bridging' | 'prestige';

export const METRICS: MetricName[] = ['degree', 'pagerank', 'bridging', 'prestige'];

export interface SessionView {
  id: string;
  mode: string;
  seed_prompt: string;
  steps: number;
  max_steps: number;
  nodes: number;
  edges: number;
  top_degree: Array<{ node: string; value: number }>;
  status: SessionStatus;
  error: string | null;
}

export interface GraphNode {
  id: string;
  display: string;
  steps: number[];
  metrics: Record<MetricName, number>;
}

export interface GraphEdge {
  source: string;
  target: string;
  relation: string;
  note: string | null;
  steps: number[];
}

export interface GraphPayload {
  nodes: GraphNode[];
  edges: GraphEdge[];
}

export interface PatternRelation {
  kind: string;
  lhs: string[];
  rhs: string[];
  conditional: Array<{ kind: string; lhs: string[]; rhs: string[] }>;
}

export interface TraceRecord {
  index: number;
  thinking: string | null;
  sections: Record<string, string>;
  triples: Array<{ subject: string; relation: string; object: string; note: string | null }>;
  pattern: {
    states: Array<{ symbol: string; binding: string | null }>;
    relations: PatternRelation[];
    context: string;
  } | null;
  critique: string | null;
  final_answer: string;
}

export interface StepPayload {
  index: number;
  prompt: string;
  prompt_source: 'seed' | 'human' | 'autonomous';
  final_answer: string;
  records: TraceRecord[];
  subgraph_nodes: number;
  subgraph_edges: number;
}

export interface StatusEvent {
  session: string;
  status: SessionStatus;
  step: number;
  error?: string;
}
