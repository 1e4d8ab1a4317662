/** Workbench wiring: session list, graph pane, step controls, trace panel. */

import { GardenApi, StepInProgressError } from './api';
import { renderGraph } from './graphView';
import { GraphViewModel, sameGraph, stepsPresent } from './state';
import { renderTracePanel } from './tracePanel';
import { METRICS, type MetricName, type SessionView, type StatusEvent } from './types';

const WIDTH = 900;
const HEIGHT = 620;

export class App {
  private api = new GardenApi();
  private model = new GraphViewModel();
  private session: SessionView | null = null;
  private colorByStep = false;
  private unsubscribe: (() => void) | null = null;

  constructor(private root: Document) {}

  private el<T extends HTMLElement>(id: string): T {
    return this.root.getElementById(id) as T;
  }

  async start(): Promise<void> {
    this.el<HTMLButtonElement>('create').addEventListener('click', () => this.createSession());
    this.el<HTMLButtonElement>('grow-steered').addEventListener('click', () => {
      const input = this.el<HTMLInputElement>('prompt');
      if (input.value.trim()) this.steerStep(input.value.trim());
    });
    this.el<HTMLButtonElement>('grow-auto').addEventListener('click', () => this.steerStep());
    const metricSelect = this.el<HTMLSelectElement>('metric');
    for (const metric of METRICS) {
      const option = this.root.createElement('option');
      option.value = metric;
      option.textContent = metric;
      metricSelect.appendChild(option);
    }
    metricSelect.addEventListener('change', () => {
      this.model.setMetric(metricSelect.value as MetricName);
      this.redraw(false); // rebind sizes; keep the layout
    });
    this.el<HTMLInputElement>('color-by-step').addEventListener('change', (event) => {
      this.colorByStep = (event.target as HTMLInputElement).checked;
      this.redraw(false);
    });
    await this.refreshSessions();
  }

  private async refreshSessions(): Promise<void> {
    const sessions = await this.api.listSessions();
    const list = this.el<HTMLUListElement>('sessions');
    list.replaceChildren();
    for (const session of sessions) {
      const item = this.root.createElement('li');
      const link = this.root.createElement('a');
      link.textContent = `${session.id} (${session.steps} steps, ${session.nodes} nodes)`;
      link.href = '#';
      link.addEventListener('click', (event) => {
        event.preventDefault();
        this.openSession(session.id);
      });
      item.appendChild(link);
      list.appendChild(item);
    }
  }

  private async createSession(): Promise<void> {
    const seed = this.el<HTMLInputElement>('seed').value.trim();
    if (!seed) return;
    const view = await this.api.createSession(seed, 'steered');
    await this.refreshSessions();
    await this.openSession(view.id);
  }

  private async openSession(id: string): Promise<void> {
    this.session = await this.api.getSession(id);
    this.unsubscribe?.();
    this.unsubscribe = this.api.subscribe(id, (event) => this.onStatus(event));
    await this.refreshGraph();
    this.renderStatus();
    if (this.session.steps > 0) await this.openStep(this.session.steps - 1);
  }

  private async onStatus(event: StatusEvent): Promise<void> {
    if (!this.session || event.session !== this.session.id) return;
    this.session = await this.api.getSession(this.session.id);
    this.renderStatus();
    if (event.status === 'idle') {
      await this.refreshGraph();
      await this.openStep(event.step);
    }
  }

  private renderStatus(): void {
    const bar = this.el<HTMLElement>('status');
    if (!this.session) {
      bar.textContent = '';
      return;
    }
    const { id, status, steps, error } = this.session;
    bar.textContent =
      status === 'error' ? `${id}: error — ${error}` : `${id}: ${status} (${steps} steps)`;
    if (this.session.steps === 0 && status === 'idle') {
      bar.textContent += ` — seed: "${this.session.seed_prompt}"`;
    }
  }

  private async steerStep(prompt?: string): Promise<void> {
    if (!this.session) return;
    try {
      await this.api.postStep(this.session.id, prompt);
    } catch (error) {
      if (error instanceof StepInProgressError) {
        this.el<HTMLElement>('status').textContent = `${this.session.id}: step in progress`;
        return;
      }
      throw error;
    }
  }

  private async refreshGraph(): Promise<void> {
    if (!this.session) return;
    const payload = await this.api.getGraph(this.session.id);
    if (!sameGraph(payload, this.model.raw)) {
      this.model.setPayload(payload);
      this.renderStepFilter(stepsPresent(payload));
      this.redraw(true);
    }
  }

  private renderStepFilter(steps: number[]): void {
    const box = this.el<HTMLElement>('step-filter');
    box.replaceChildren();
    for (const step of steps) {
      const label = this.root.createElement('label');
      const checkbox = this.root.createElement('input');
      checkbox.type = 'checkbox';
      checkbox.checked = true;
      checkbox.dataset.step = String(step);
      checkbox.addEventListener('change', () => {
        const checked = [...box.querySelectorAll('input:checked')].map((el) =>
          Number((el as HTMLInputElement).dataset.step),
        );
        this.model.setStepFilter(checked.length === steps.length ? null : checked);
        this.redraw(false);
      });
      label.appendChild(checkbox);
      label.append(` step ${step}`);
      box.appendChild(label);
    }
  }

  private async openStep(k: number): Promise<void> {
    if (!this.session) return;
    const step = await this.api.getStep(this.session.id, k);
    renderTracePanel(this.el<HTMLElement>('trace'), step);
  }

  private redraw(relayout: boolean): void {
    const svg = this.root.getElementById('graph') as unknown as SVGSVGElement;
    renderGraph(svg, this.model, {
      width: WIDTH,
      height: HEIGHT,
      colorByStep: this.colorByStep,
      relayout,
    });
  }
}

if (typeof document !== 'undefined' && document.getElementById('graph')) {
  new App(document).start();
}
