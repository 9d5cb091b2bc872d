import { ApiError, ServiceClient } from "./api.js";
import { clear, el } from "./dom.js";
import { canonValue, parseFieldText, templateFor } from "./schema.js";
import type {
  CatalogDoc,
  DegradationEventDoc,
  FleetDoc,
  MetricDim,
  NetworkStateDoc,
  ResultDoc,
  SliceName,
  ToolDoc,
  ValueSchemaDoc,
} from "./types.js";
import { METRIC_DIMS, isOk } from "./types.js";

const HEALTHY_STATE: NetworkStateDoc = {
  slice: "EMBB",
  latency_ms: 20.0,
  jitter_ms: 5.0,
  loss_rate: 0.01,
  throughput_mbps: 50.0,
  edge_load: 0.5,
};

// server violation names keyed back to state fields
const DIM_BY_VIOLATION: Record<string, MetricDim> = {
  latency: "latency_ms",
  jitter: "jitter_ms",
  loss: "loss_rate",
  throughput: "throughput_mbps",
  edge_load: "edge_load",
};

const GAUGE_LABELS: Record<MetricDim, string> = {
  latency_ms: "latency (ms)",
  jitter_ms: "jitter (ms)",
  loss_rate: "loss rate",
  throughput_mbps: "throughput (Mbps)",
  edge_load: "edge load",
};

const DEGRADATION_KINDS = ["LINK_FADE", "CONGESTION", "GNB_OUTAGE", "EDGE_OVERLOAD"];

interface LogEntry {
  stepIndex: number;
  tool: string;
  effect: string;
  result: ResultDoc;
  stale: boolean;
  node: HTMLLIElement;
}

function summarize(value: unknown, limit = 140): string {
  const text = JSON.stringify(value);
  if (text === undefined) return String(value);
  return text.length > limit ? text.slice(0, limit - 1) + "…" : text;
}

/**
 * Live session steering: state gauges with SLA badges, catalog-driven tool
 * picker with client-side argument validation, result log, and degradation
 * injection. All state changes go through the service endpoints.
 */
export class SessionPanel {
  private root!: HTMLElement;
  private catalog: CatalogDoc | null = null;
  private sessionId: string | null = null;
  private state: NetworkStateDoc | null = null;
  private fleet: FleetDoc | null = null;
  private entries: LogEntry[] = [];

  /** In-flight UI action; tests await this after dispatching events. */
  pending: Promise<void> | null = null;

  constructor(private readonly client: ServiceClient) {}

  async init(root: HTMLElement): Promise<void> {
    this.root = root;
    this.buildSkeleton();
    this.catalog = await this.client.catalog();
    this.fillToolPicker();
  }

  // -- DOM skeleton --------------------------------------------------------

  private buildSkeleton(): void {
    const root = this.root;
    clear(root);
    root.append(
      el("section", { class: "create-box" },
        el("h2", {}, "Session"),
        el("label", {}, "seed ",
          el("input", { id: "seed-input", type: "text", value: "0" })),
        el("label", {}, "initial state ",
          el("textarea", { id: "initial-state", rows: "4" },
            JSON.stringify(HEALTHY_STATE, null, 1))),
        el("button", { id: "create-session", type: "button" }, "create session"),
        el("span", { id: "session-id", class: "session-id" }),
        el("div", { id: "create-error", class: "error-text" }),
      ),
      el("section", { class: "status-strip" },
        el("span", { id: "slice-badge", class: "slice-badge" }, "-"),
        el("span", { id: "outcome-badge", class: "outcome-badge" }, "-"),
        el("span", { id: "step-count" }, "steps: 0"),
        el("span", { id: "degradation-badge", class: "degradation-badge" }),
        el("span", { id: "stale-flag", class: "stale-flag", hidden: "" },
          "configuration changed the network: earlier observations are stale"),
      ),
      el("section", { id: "gauges", class: "gauges" }),
      el("section", { class: "fleet-box" },
        el("h3", {}, "UAV fleet"),
        el("table", { id: "fleet-table" })),
      el("section", { class: "tool-box" },
        el("h3", {}, "Execute a tool"),
        el("select", { id: "tool-picker" }),
        el("div", { id: "arg-form" }),
        el("button", { id: "execute-call", type: "button", disabled: "" }, "execute"),
        el("div", { id: "form-error", class: "error-text" }),
      ),
      el("section", { class: "degradation-box" },
        el("h3", {}, "Inject degradation"),
        el("select", { id: "deg-kind" },
          ...DEGRADATION_KINDS.map((k) => el("option", { value: k }, k))),
        el("label", {}, "onset step ",
          el("input", { id: "deg-onset", type: "text", placeholder: "now" })),
        el("label", {}, "duration ",
          el("input", { id: "deg-duration", type: "text", value: "5" })),
        el("label", {}, "severity ",
          el("input", { id: "deg-severity", type: "text", value: "0.8" })),
        el("button", { id: "inject-degradation", type: "button", disabled: "" },
          "inject"),
      ),
      el("section", { class: "log-box" },
        el("h3", {}, "Result log"),
        el("ol", { id: "result-log" })),
    );

    const gauges = this.byId("gauges");
    for (const dim of METRIC_DIMS) {
      gauges.append(
        el("div", { class: "gauge", "data-dim": dim },
          el("span", { class: "gauge-label" }, GAUGE_LABELS[dim]),
          el("span", { class: "gauge-value" }, "-"),
          el("span", { class: "sla-badge" }, "-"),
        ),
      );
    }

    this.byId("create-session").addEventListener("click", () => {
      this.pending = this.createSession();
    });
    this.byId("execute-call").addEventListener("click", () => {
      this.pending = this.executeCall();
    });
    this.byId("inject-degradation").addEventListener("click", () => {
      this.pending = this.injectDegradation();
    });
    (this.byId("tool-picker") as HTMLSelectElement).addEventListener("change", () =>
      this.buildArgForm());
  }

  private byId(id: string): HTMLElement {
    const node = this.root.querySelector(`#${id}`);
    if (!(node instanceof HTMLElement)) throw new Error(`missing #${id}`);
    return node;
  }

  private fillToolPicker(): void {
    const picker = this.byId("tool-picker") as HTMLSelectElement;
    clear(picker);
    for (const tool of this.catalog?.tools ?? []) {
      picker.append(el("option", { value: tool.name },
        `${tool.name} [${tool.effect.toLowerCase()}]`));
    }
    this.buildArgForm();
  }

  // -- session lifecycle ---------------------------------------------------

  private async createSession(): Promise<void> {
    const errBox = this.byId("create-error");
    errBox.textContent = "";
    const seedRaw = (this.byId("seed-input") as HTMLInputElement).value.trim();
    const seed = seedRaw === "" ? 0 : Number(seedRaw);
    if (!Number.isInteger(seed)) {
      errBox.textContent = "seed must be an integer";
      return;
    }
    let initial: NetworkStateDoc;
    try {
      initial = JSON.parse(
        (this.byId("initial-state") as HTMLTextAreaElement).value,
      ) as NetworkStateDoc;
    } catch {
      errBox.textContent = "initial state is not valid JSON";
      return;
    }
    try {
      const doc = await this.client.createSession({ seed, initial_state: initial });
      this.sessionId = doc.session_id;
      this.entries = [];
      clear(this.byId("result-log"));
      this.byId("session-id").textContent = doc.session_id;
      this.byId("execute-call").removeAttribute("disabled");
      this.byId("inject-degradation").removeAttribute("disabled");
      this.setStaleFlag(false);
      await this.refresh();
      this.buildArgForm();
    } catch (exc) {
      errBox.textContent = exc instanceof ApiError ? exc.detail : String(exc);
    }
  }

  /** Pull authoritative state, fleet, violations, and outcome. */
  private async refresh(): Promise<void> {
    if (this.sessionId === null) return;
    const doc = await this.client.sessionState(this.sessionId);
    this.state = doc.state;
    this.fleet = doc.fleet;
    this.renderState(doc.state, doc.violations);
    this.renderFleet(doc.fleet);
    this.byId("outcome-badge").textContent = doc.outcome_so_far;
    this.byId("outcome-badge").className =
      `outcome-badge outcome-${doc.outcome_so_far.toLowerCase()}`;
    this.byId("step-count").textContent = `steps: ${doc.step_count}`;
    this.renderDegradation(doc.active_degradation);
  }

  private renderState(state: NetworkStateDoc, violations: string[]): void {
    const badge = this.byId("slice-badge");
    badge.textContent = state.slice;
    badge.className = `slice-badge slice-${state.slice.toLowerCase()}`;
    const breached = new Set(
      violations.map((v) => DIM_BY_VIOLATION[v]).filter((d) => d !== undefined));
    for (const dim of METRIC_DIMS) {
      const gauge = this.root.querySelector(`.gauge[data-dim="${dim}"]`);
      if (!(gauge instanceof HTMLElement)) continue;
      const value = gauge.querySelector(".gauge-value");
      const sla = gauge.querySelector(".sla-badge");
      if (value) value.textContent = formatMetric(dim, state[dim]);
      if (sla) {
        const isBreach = breached.has(dim);
        sla.textContent = isBreach ? "BREACH" : "OK";
        sla.className = isBreach ? "sla-badge breach" : "sla-badge ok";
      }
    }
  }

  private renderFleet(fleet: FleetDoc): void {
    const table = this.byId("fleet-table") as HTMLTableElement;
    clear(table);
    table.append(el("tr", {},
      ...["uav", "position", "battery", "serving gNB", "waypoint"].map((h) =>
        el("th", {}, h))));
    for (const uav of fleet.uavs) {
      table.append(el("tr", { class: "fleet-row", "data-uav": uav.uav_id },
        el("td", {}, uav.uav_id),
        el("td", {}, uav.position.map((c) => c.toFixed(0)).join(", ")),
        el("td", {}, `${Math.round(uav.battery_fraction * 100)}%`),
        el("td", { class: "serving-gnb" }, uav.serving_gnb_id),
        el("td", {}, uav.current_waypoint
          ? uav.current_waypoint.map((c) => c.toFixed(0)).join(", ")
          : "-"),
      ));
    }
  }

  private renderDegradation(event: DegradationEventDoc | null): void {
    const badge = this.byId("degradation-badge");
    if (event === null) {
      badge.textContent = "";
      badge.className = "degradation-badge";
    } else {
      badge.textContent =
        `${event.kind} active (severity ${event.severity.toFixed(2)})`;
      badge.className = "degradation-badge active";
    }
  }

  // -- argument form -------------------------------------------------------

  private currentTool(): ToolDoc | null {
    const picker = this.byId("tool-picker") as HTMLSelectElement;
    return this.catalog?.tools.find((t) => t.name === picker.value) ?? null;
  }

  private resolveSchema(typeName: string): ValueSchemaDoc | null {
    return this.catalog?.domains[typeName] ?? null;
  }

  private buildArgForm(): void {
    const form = this.byId("arg-form");
    clear(form);
    this.byId("form-error").textContent = "";
    const tool = this.currentTool();
    if (tool === null) return;
    for (const param of tool.params) {
      const schema = this.resolveSchema(param.type);
      const field = el("div", { class: "arg-field" },
        el("label", {}, `${param.name} (${param.type})`));
      field.append(this.inputFor(param.name, param.type, schema, tool));
      field.append(el("div", { class: "field-error", "data-param": param.name }));
      form.append(field);
    }
  }

  private inputFor(
    name: string,
    typeName: string,
    schema: ValueSchemaDoc | null,
    tool: ToolDoc,
  ): HTMLElement {
    if (schema === null) {
      return el("input", { "data-param": name, type: "text" });
    }
    if (schema.kind === "choice") {
      const select = el("select", { "data-param": name },
        ...schema.options.map((o) => el("option", { value: o }, o)));
      const prefill = this.choicePrefill(name, schema, tool);
      if (prefill !== null) select.value = prefill;
      return select;
    }
    if (schema.kind === "boolean") {
      return el("input", { "data-param": name, type: "checkbox", checked: "" });
    }
    if (schema.kind === "record" || schema.kind === "list" || schema.kind === "position") {
      const textarea = el("textarea", { "data-param": name, rows: "4" });
      textarea.value = JSON.stringify(this.compoundPrefill(typeName, schema), null, 1);
      return textarea;
    }
    const input = el("input", { "data-param": name, type: "text" });
    input.value = String(this.scalarPrefill(name, schema));
    return input;
  }

  private choicePrefill(name: string, schema: ValueSchemaDoc & { kind: "choice" },
      tool: ToolDoc): string | null {
    const slice = this.state?.slice;
    if (slice !== undefined && schema.options.includes(slice)) {
      if (name === "from_slice") return slice;
      if (name === "to_slice" || tool.name === "trigger_slice_reallocation") {
        const other = schema.options.find((o) => o !== slice);
        return other ?? slice;
      }
      return slice;
    }
    return schema.options[0] ?? null;
  }

  private scalarPrefill(name: string, schema: ValueSchemaDoc): unknown {
    if (schema.kind === "string") {
      if (name === "uav_id") {
        const first = this.fleet?.uavs[0];
        if (first !== undefined) return first.uav_id;
      }
      if (name.endsWith("gnb_id")) {
        const first = this.fleet?.uavs[0];
        if (first !== undefined) return first.serving_gnb_id;
      }
    }
    return templateFor(schema);
  }

  private compoundPrefill(typeName: string, schema: ValueSchemaDoc): unknown {
    // probe-style params carry the live reading when one is available
    if (this.state !== null &&
        (typeName === "NetworkState" || typeName === "TelemetryState")) {
      const probe: Record<string, unknown> = { ...this.state };
      if (typeName === "TelemetryState") {
        probe.rsrp_dbm = -80.0;
        probe.link_quality = 0.9;
      }
      return probe;
    }
    return templateFor(schema);
  }

  // -- call execution ------------------------------------------------------

  private async executeCall(): Promise<void> {
    const formError = this.byId("form-error");
    formError.textContent = "";
    if (this.sessionId === null) {
      formError.textContent = "create a session first";
      return;
    }
    const tool = this.currentTool();
    if (tool === null) {
      formError.textContent = "pick a tool";
      return;
    }

    const args: unknown[] = [];
    let invalid = false;
    for (const param of tool.params) {
      const errBox = this.root.querySelector(
        `.field-error[data-param="${param.name}"]`) as HTMLElement | null;
      if (errBox) errBox.textContent = "";
      const schema = this.resolveSchema(param.type);
      if (schema === null) {
        if (errBox) errBox.textContent = `unknown domain type ${param.type}`;
        invalid = true;
        continue;
      }
      const widget = this.root.querySelector(`[data-param="${param.name}"]`);
      let value: unknown;
      if (widget instanceof HTMLInputElement && widget.type === "checkbox") {
        value = widget.checked;
      } else if (widget instanceof HTMLInputElement ||
                 widget instanceof HTMLTextAreaElement ||
                 widget instanceof HTMLSelectElement) {
        const parsed = parseFieldText(schema, widget.value);
        if ("error" in parsed) {
          if (errBox) errBox.textContent = parsed.error;
          invalid = true;
          continue;
        }
        value = parsed.value;
      } else {
        if (errBox) errBox.textContent = "missing input";
        invalid = true;
        continue;
      }
      try {
        args.push(canonValue(schema, value));
      } catch (exc) {
        if (errBox) errBox.textContent = (exc as Error).message;
        invalid = true;
      }
    }
    // invalid arguments never reach the service
    if (invalid) return;

    try {
      const doc = await this.client.call(this.sessionId, tool.name, args);
      this.state = doc.state;
      this.renderState(doc.state, doc.violations);
      this.renderDegradation(doc.degradation_active);
      this.byId("step-count").textContent = `steps: ${doc.step_count}`;
      this.appendLogEntry(doc.step_index, tool, doc.result);
      if (tool.effect === "CONFIGURATION" && isOk(doc.result)) {
        this.markObservationsStale();
      } else if (tool.effect === "OBSERVATION") {
        this.setStaleFlag(false);
      }
      await this.refresh();
    } catch (exc) {
      formError.textContent = exc instanceof ApiError ? exc.detail : String(exc);
    }
  }

  private appendLogEntry(stepIndex: number, tool: ToolDoc, result: ResultDoc): void {
    const log = this.byId("result-log") as HTMLOListElement;
    const ok = isOk(result);
    const body = ok
      ? `ok ${summarize(result.ok)}`
      : `error ${result.error.code}: ${result.error.message}`;
    const node = el("li", {
      class: `log-entry effect-${tool.effect.toLowerCase()} ${ok ? "ok" : "err"}`,
    },
      el("span", { class: "log-step" }, `#${stepIndex}`),
      el("span", { class: "log-tool" }, tool.name),
      el("span", { class: "log-body" }, body),
      el("span", { class: "stale-tag" }, "stale"),
    );
    log.append(node);
    this.entries.push({
      stepIndex, tool: tool.name, effect: tool.effect, result, stale: false, node,
    });
  }

  private markObservationsStale(): void {
    for (const entry of this.entries) {
      if (entry.effect === "OBSERVATION" && !entry.stale) {
        entry.stale = true;
        entry.node.classList.add("stale");
      }
    }
    this.setStaleFlag(true);
  }

  private setStaleFlag(visible: boolean): void {
    const flag = this.byId("stale-flag");
    if (visible) {
      flag.removeAttribute("hidden");
    } else {
      flag.setAttribute("hidden", "");
    }
  }

  // -- degradation injection ----------------------------------------------

  private async injectDegradation(): Promise<void> {
    if (this.sessionId === null) return;
    const formError = this.byId("form-error");
    formError.textContent = "";
    const kind = (this.byId("deg-kind") as HTMLSelectElement).value;
    const onsetRaw = (this.byId("deg-onset") as HTMLInputElement).value.trim();
    const duration = Number((this.byId("deg-duration") as HTMLInputElement).value);
    const severity = Number((this.byId("deg-severity") as HTMLInputElement).value);
    const body: { kind: string; onset_step?: number; duration_steps?: number;
      severity?: number } = { kind };
    if (onsetRaw !== "") body.onset_step = Number(onsetRaw);
    if (Number.isFinite(duration)) body.duration_steps = duration;
    if (Number.isFinite(severity)) body.severity = severity;
    try {
      const ack = await this.client.injectDegradation(this.sessionId, body);
      const log = this.byId("result-log") as HTMLOListElement;
      log.append(el("li", { class: "log-entry log-info" },
        `degradation scheduled: ${ack.event.kind} onset ${ack.event.onset_step} ` +
        `duration ${ack.event.duration_steps} severity ${ack.event.severity}`));
      await this.refresh();
    } catch (exc) {
      formError.textContent = exc instanceof ApiError ? exc.detail : String(exc);
    }
  }

  // -- accessors for scripting and tests -----------------------------------

  get currentSessionId(): string | null {
    return this.sessionId;
  }

  get currentSlice(): SliceName | null {
    return this.state?.slice ?? null;
  }

  staleEntryCount(): number {
    return this.entries.filter((e) => e.stale).length;
  }
}

function formatMetric(dim: MetricDim, value: number): string {
  if (dim === "loss_rate" || dim === "edge_load") return value.toFixed(3);
  return value.toFixed(1);
}
