import { beforeEach, describe, expect, it } from "vitest";
import { ServiceClient } from "../src/api.js";
import { SessionPanel } from "../src/session.js";
import { FakeGym } from "./helpers/fakeGym.js";

let gym: FakeGym;
let panel: SessionPanel;
let root: HTMLElement;

function q(sel: string): HTMLElement {
  const node = root.querySelector(sel);
  if (!(node instanceof HTMLElement)) throw new Error(`missing ${sel}`);
  return node;
}

function pickTool(name: string): void {
  const picker = q("#tool-picker") as HTMLSelectElement;
  picker.value = name;
  picker.dispatchEvent(new Event("change"));
}

async function clickAndSettle(sel: string): Promise<void> {
  q(sel).dispatchEvent(new MouseEvent("click"));
  await panel.pending;
}

async function createSession(): Promise<void> {
  await clickAndSettle("#create-session");
}

beforeEach(async () => {
  document.body.innerHTML = "<div id='host'></div>";
  root = document.getElementById("host") as HTMLElement;
  gym = new FakeGym();
  panel = new SessionPanel(new ServiceClient("http://fake.test", gym.fetch));
  await panel.init(root);
});

describe("panel setup", () => {
  it("fills the tool picker from the catalog", () => {
    const options = root.querySelectorAll("#tool-picker option");
    expect(options).toHaveLength(42);
    expect([...options].map((o) => (o as HTMLOptionElement).value))
      .toContain("switch_network_slice");
  });

  it("keeps execute disabled until a session exists", () => {
    expect(q("#execute-call").hasAttribute("disabled")).toBe(true);
  });
});

describe("session lifecycle", () => {
  it("creates a session and renders the state", async () => {
    await createSession();
    expect(panel.currentSessionId).toBe("fakesession01");
    expect(q("#session-id").textContent).toBe("fakesession01");
    expect(q("#slice-badge").textContent).toBe("EMBB");
    expect(q(".gauge[data-dim='latency_ms'] .gauge-value").textContent).toBe("20.0");
    expect(root.querySelectorAll(".sla-badge.ok")).toHaveLength(5);
    expect(q("#execute-call").hasAttribute("disabled")).toBe(false);
    expect(q("#outcome-badge").textContent).toBe("FAILURE");
  });

  it("renders the fleet table", async () => {
    await createSession();
    const rows = root.querySelectorAll("#fleet-table .fleet-row");
    expect(rows).toHaveLength(2);
    expect(rows[0]?.getAttribute("data-uav")).toBe("uav-1");
    expect(rows[0]?.querySelector(".serving-gnb")?.textContent).toBe("gnb-1");
  });

  it("rejects bad JSON in the initial state box without a request", async () => {
    (q("#initial-state") as HTMLTextAreaElement).value = "{nope";
    const before = gym.requests.length;
    await createSession();
    expect(q("#create-error").textContent).toMatch(/not valid JSON/);
    expect(gym.requests.length).toBe(before);
  });
});

describe("observation calls", () => {
  it("logs the result and leaves the gauges alone", async () => {
    await createSession();
    pickTool("read_telemetry");
    await clickAndSettle("#execute-call");
    const entries = root.querySelectorAll("#result-log .log-entry");
    expect(entries).toHaveLength(1);
    expect(entries[0]?.className).toContain("effect-observation");
    expect(entries[0]?.textContent).toContain("read_telemetry");
    expect(entries[0]?.textContent).toContain("ok");
    expect(q(".gauge[data-dim='latency_ms'] .gauge-value").textContent).toBe("20.0");
    expect(q("#stale-flag").hasAttribute("hidden")).toBe(true);
    expect(q("#step-count").textContent).toBe("steps: 1");
  });
});

describe("client-side validation", () => {
  it("flags an empty uav id inline and skips the service call", async () => {
    await createSession();
    pickTool("read_uav_position");
    const input = root.querySelector("[data-param='uav_id']") as HTMLInputElement;
    input.value = "";
    const before = gym.requests.length;
    await clickAndSettle("#execute-call");
    expect(q(".field-error[data-param='uav_id']").textContent)
      .toMatch(/non-empty/);
    expect(gym.requests.length).toBe(before);
    expect(root.querySelectorAll("#result-log .log-entry")).toHaveLength(0);
  });

  it("flags an out-of-range altitude", async () => {
    await createSession();
    pickTool("adjust_altitude");
    const input = root.querySelector("[data-param='altitude_m']") ??
      root.querySelectorAll("#arg-form input")[1];
    (input as HTMLInputElement).value = "12000";
    const before = gym.requests.length;
    await clickAndSettle("#execute-call");
    const errors = [...root.querySelectorAll(".field-error")]
      .map((e) => e.textContent)
      .join(" ");
    expect(errors).toMatch(/above maximum/);
    expect(gym.requests.length).toBe(before);
  });

  it("flags a JSON syntax error in a record field", async () => {
    await createSession();
    pickTool("verify_sla_compliance");
    const area = root.querySelector("#arg-form textarea") as HTMLTextAreaElement;
    area.value = "{broken";
    const before = gym.requests.length;
    await clickAndSettle("#execute-call");
    const errors = [...root.querySelectorAll(".field-error")]
      .map((e) => e.textContent)
      .join(" ");
    expect(errors).toMatch(/not valid JSON/);
    expect(gym.requests.length).toBe(before);
  });

  it("prefills probe records from the live state", async () => {
    await createSession();
    pickTool("verify_sla_compliance");
    const area = root.querySelector("#arg-form textarea") as HTMLTextAreaElement;
    const probe = JSON.parse(area.value) as Record<string, unknown>;
    expect(probe.slice).toBe("EMBB");
    expect(probe.latency_ms).toBe(20);
  });
});

describe("configuration staleness", () => {
  it("marks earlier observations stale and shows the flag", async () => {
    await createSession();
    pickTool("read_telemetry");
    await clickAndSettle("#execute-call");

    pickTool("switch_network_slice");
    const to = root.querySelector("select[data-param='to_slice']") as HTMLSelectElement;
    to.value = "URLLC";
    await clickAndSettle("#execute-call");

    expect(q("#slice-badge").textContent).toBe("URLLC");
    expect(q("#stale-flag").hasAttribute("hidden")).toBe(false);
    expect(panel.staleEntryCount()).toBe(1);
    const staleEntries = root.querySelectorAll("#result-log .log-entry.stale");
    expect(staleEntries).toHaveLength(1);
    expect(staleEntries[0]?.textContent).toContain("read_telemetry");
  });

  it("clears the flag once a fresh observation lands", async () => {
    await createSession();
    pickTool("read_telemetry");
    await clickAndSettle("#execute-call");
    pickTool("switch_network_slice");
    await clickAndSettle("#execute-call");
    expect(q("#stale-flag").hasAttribute("hidden")).toBe(false);

    pickTool("check_network_state");
    await clickAndSettle("#execute-call");
    expect(q("#stale-flag").hasAttribute("hidden")).toBe(true);
    // the old reading stays marked; only the banner clears
    expect(panel.staleEntryCount()).toBe(1);
  });

  it("prefills from_slice with the live slice", async () => {
    await createSession();
    pickTool("switch_network_slice");
    const from = root.querySelector("select[data-param='from_slice']") as HTMLSelectElement;
    const to = root.querySelector("select[data-param='to_slice']") as HTMLSelectElement;
    expect(from.value).toBe("EMBB");
    expect(to.value).not.toBe("EMBB");
  });
});

describe("degradation injection", () => {
  it("posts the event and logs the acknowledgement", async () => {
    await createSession();
    (q("#deg-kind") as HTMLSelectElement).value = "CONGESTION";
    (q("#deg-onset") as HTMLInputElement).value = "3";
    (q("#deg-duration") as HTMLInputElement).value = "4";
    (q("#deg-severity") as HTMLInputElement).value = "0.9";
    await clickAndSettle("#inject-degradation");
    const info = root.querySelector("#result-log .log-info");
    expect(info?.textContent).toContain("CONGESTION");
    expect(info?.textContent).toContain("onset 3");
    const posted = gym.requests.find((r) => r.path.endsWith("/degradation"));
    expect(posted?.body).toEqual({
      kind: "CONGESTION", onset_step: 3, duration_steps: 4, severity: 0.9,
    });
  });
});

describe("service errors", () => {
  it("surfaces a structured rejection in the form error box", async () => {
    await createSession();
    gym.failNextCall = { status: 409, detail: "a step is already in flight" };
    pickTool("read_telemetry");
    await clickAndSettle("#execute-call");
    expect(q("#form-error").textContent).toMatch(/in flight/);
    expect(root.querySelectorAll("#result-log .log-entry")).toHaveLength(0);
  });
});
