import { DecisionAnalyzer } from "./analyzer.js";
import { ServiceClient } from "./api.js";
import { clear, el } from "./dom.js";
import { TraceExplorer } from "./explorer.js";
import { UavHeatmap } from "./heatmap.js";
import { SessionPanel } from "./session.js";
import { DocumentStore } from "./store.js";

const VIEWS = [
  ["session", "Session"],
  ["explorer", "Trace explorer"],
  ["analyzer", "Decision analyzer"],
  ["heatmap", "UAV heatmap"],
] as const;

export interface ConsoleApp {
  panel: SessionPanel;
  explorer: TraceExplorer;
  analyzer: DecisionAnalyzer;
  heatmap: UavHeatmap;
  store: DocumentStore;
  showView(name: string): void;
}

/** Assemble the console shell: tab bar plus the four views. */
export async function mountApp(
  root: HTMLElement,
  client: ServiceClient,
): Promise<ConsoleApp> {
  clear(root);
  const tabBar = el("nav", { class: "tab-bar" });
  const sections: Record<string, HTMLElement> = {};
  root.append(
    el("header", { class: "console-header" },
      el("h1", {}, "slicegym console"),
      el("span", { class: "service-url" }, client.baseUrl)),
    tabBar,
  );
  for (const [name, label] of VIEWS) {
    const tab = el("button", { class: "tab", "data-view": name, type: "button" },
      label);
    tab.addEventListener("click", () => showView(name));
    tabBar.append(tab);
    const section = el("section", { class: "view", "data-view": name, hidden: "" });
    sections[name] = section;
    root.append(section);
  }

  function showView(name: string): void {
    for (const [viewName, section] of Object.entries(sections)) {
      if (viewName === name) {
        section.removeAttribute("hidden");
      } else {
        section.setAttribute("hidden", "");
      }
    }
    for (const tab of tabBar.querySelectorAll(".tab")) {
      tab.classList.toggle("active", tab.getAttribute("data-view") === name);
    }
  }

  const store = new DocumentStore();
  const panel = new SessionPanel(client);
  const explorer = new TraceExplorer(store);
  const analyzer = new DecisionAnalyzer(client, store);
  const heatmap = new UavHeatmap(store);

  explorer.init(sections.explorer as HTMLElement);
  analyzer.init(sections.analyzer as HTMLElement);
  heatmap.init(sections.heatmap as HTMLElement);
  await panel.init(sections.session as HTMLElement);

  showView("session");
  return { panel, explorer, analyzer, heatmap, store, showView };
}
