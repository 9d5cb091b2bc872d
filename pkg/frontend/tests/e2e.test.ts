// Scripted browser session against the real gym service: spawns the python
// process, mounts the console in jsdom, and drives it through DOM events.

import { spawn, type ChildProcess } from "node:child_process";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { ServiceClient } from "../src/api.js";
import { mountApp, type ConsoleApp } from "../src/app.js";
import { parseTrajectories } from "../src/trajectory.js";
import { DOCUMENTED_ENDPOINTS, readFixture,
  type RecordedRequest } from "./helpers/fakeGym.js";

const PORT = 18300 + Math.floor(Math.random() * 2000);
const BASE = `http://127.0.0.1:${PORT}`;
const REPO_ROOT = join(__dirname, "..", "..");

let service: ChildProcess;
const audit: RecordedRequest[] = [];

async function waitForService(): Promise<void> {
  for (let i = 0; i < 120; i++) {
    try {
      const resp = await fetch(`${BASE}/catalog`);
      if (resp.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 500));
  }
  throw new Error(`gym service did not come up on ${BASE}`);
}

beforeAll(async () => {
  service = spawn("python3", ["-m", "slicegym.service"], {
    cwd: REPO_ROOT,
    env: { ...process.env, SLICEGYM_BIND: `127.0.0.1:${PORT}` },
    stdio: ["ignore", "pipe", "pipe"],
  });
  await waitForService();
});

afterAll(async () => {
  service.kill("SIGTERM");
  await new Promise((resolve) => {
    service.on("exit", resolve);
    setTimeout(resolve, 3000);
  });
});

function auditingFetch(input: string, init?: RequestInit): Promise<Response> {
  const url = new URL(input);
  audit.push({
    method: (init?.method ?? "GET").toUpperCase(),
    path: url.pathname,
    body: init?.body !== undefined ? JSON.parse(String(init.body)) : null,
  });
  return fetch(input, init);
}

describe("operator console against the live service", () => {
  let app: ConsoleApp;
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

  async function click(sel: string): Promise<void> {
    q(sel).dispatchEvent(new MouseEvent("click"));
    await app.panel.pending;
  }

  beforeAll(async () => {
    document.body.innerHTML = "<div id='console'></div>";
    root = document.getElementById("console") as HTMLElement;
    app = await mountApp(root, new ServiceClient(BASE, auditingFetch));
  });

  it("creates a session, observes, reconfigures, and sees the flags", async () => {
    (q("#seed-input") as HTMLInputElement).value = "7";
    await click("#create-session");
    const sessionId = app.panel.currentSessionId;
    expect(sessionId).toMatch(/^[0-9a-f]{12}$/);
    expect(q("#slice-badge").textContent).toBe("EMBB");
    expect(q(".gauge[data-dim='latency_ms'] .gauge-value").textContent).toBe("20.0");
    expect(root.querySelectorAll("#fleet-table .fleet-row").length).toBeGreaterThan(0);

    // one observation call: state untouched, log gains an ok entry
    pickTool("read_telemetry");
    await click("#execute-call");
    expect(root.querySelectorAll("#result-log .log-entry")).toHaveLength(1);
    expect(q("#result-log .log-entry").textContent).toContain("ok");
    expect(q("#slice-badge").textContent).toBe("EMBB");
    expect(q("#stale-flag").hasAttribute("hidden")).toBe(true);

    // one configuration call: slice badge changes, stale flag appears
    pickTool("switch_network_slice");
    const from = root.querySelector("select[data-param='from_slice']") as HTMLSelectElement;
    const to = root.querySelector("select[data-param='to_slice']") as HTMLSelectElement;
    expect(from.value).toBe("EMBB");
    to.value = "URLLC";
    await click("#execute-call");

    expect(q("#slice-badge").textContent).toBe("URLLC");
    expect(q("#stale-flag").hasAttribute("hidden")).toBe(false);
    const stale = root.querySelectorAll("#result-log .log-entry.stale");
    expect(stale).toHaveLength(1);
    expect(stale[0]?.textContent).toContain("read_telemetry");
    expect(q("#step-count").textContent).toBe("steps: 2");

    // the service agrees with what the console displayed
    const doc = parseTrajectories(
      await new ServiceClient(BASE).trajectory(sessionId as string))[0]!;
    expect(doc.entries).toHaveLength(2);
    expect(doc.entries[0]?.call.tool).toBe("read_telemetry");
    expect(doc.entries[1]?.call.tool).toBe("switch_network_slice");
    expect(doc.entries[1]?.state_after.slice).toBe("URLLC");
  });

  it("rejects a malformed argument inline without a service round trip", async () => {
    const before = audit.length;
    pickTool("read_uav_position");
    (root.querySelector("[data-param='uav_id']") as HTMLInputElement).value = "";
    await click("#execute-call");
    expect(q(".field-error[data-param='uav_id']").textContent).toMatch(/non-empty/);
    expect(audit.length).toBe(before);
  });

  it("injects a degradation and shows it active", async () => {
    (q("#deg-kind") as HTMLSelectElement).value = "LINK_FADE";
    (q("#deg-duration") as HTMLInputElement).value = "3";
    (q("#deg-severity") as HTMLInputElement).value = "1.0";
    await click("#inject-degradation");
    expect(q("#result-log .log-info").textContent).toContain("LINK_FADE");

    pickTool("read_telemetry");
    await click("#execute-call");
    expect(q("#degradation-badge").textContent).toContain("LINK_FADE");
  });

  it("renders exactly one violation region for the one-window trace", async () => {
    app.showView("explorer");
    const loaded = app.explorer.loadText(readFixture("one_breach.csv"), "one_breach");
    expect(loaded).toBe(true);
    await app.analyzer.pending;

    expect(app.explorer.violationRegionCount()).toBe(1);
    expect(root.querySelectorAll("rect.violation-region")).toHaveLength(1);

    // the live annotator saw the same document
    const count = document.getElementById("point-count")?.textContent ?? "";
    expect(count).toMatch(/\d+ decision points/);
    const kinds = new Set(
      [...document.querySelectorAll("#point-timeline .decision-point")]
        .map((n) => n.getAttribute("data-kind")));
    expect(kinds.has("sla_breach")).toBe(true);
    expect(kinds.has("degradation_onset")).toBe(true);
    expect(document.querySelectorAll("#point-histogram .hist-bar").length)
      .toBeGreaterThanOrEqual(2);
  });

  it("only ever talks to documented endpoints", () => {
    expect(audit.length).toBeGreaterThan(0);
    for (const req of audit) {
      const line = `${req.method} ${req.path}`;
      expect(
        DOCUMENTED_ENDPOINTS.some((re) => re.test(line)),
        line,
      ).toBe(true);
    }
  });
});
