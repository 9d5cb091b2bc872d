import { ServiceClient } from "./api.js";
import { mountApp } from "./app.js";
import { el } from "./dom.js";

const DEFAULT_SERVICE = "http://127.0.0.1:8351";

const root = document.getElementById("app");
if (root !== null) {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("service") ?? DEFAULT_SERVICE;
  mountApp(root, new ServiceClient(base)).catch((exc: unknown) => {
    root.append(
      el("p", { class: "error-text" },
        `cannot reach the gym service at ${base}: ${String(exc)} ` +
        "(start it with: python3 -m slicegym.service)"),
    );
  });
}
