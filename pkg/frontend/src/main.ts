// Entry point: report picker, editor token field, and hash routing
// between the editorial screens and the metrics dashboard.

import { NepkitApi } from "./api.js";
import { Dashboard } from "./dashboard.js";
import { App } from "./views.js";

const TOKEN_KEY = "nepkit-editor-token";

function option(value: string, label: string): HTMLOptionElement {
  const node = document.createElement("option");
  node.value = value;
  node.textContent = label;
  return node;
}

async function boot(): Promise<void> {
  const api = new NepkitApi("");
  const stored = window.localStorage.getItem(TOKEN_KEY);
  if (stored) api.setToken(stored);

  const header = document.getElementById("header")!;
  const content = document.getElementById("content")!;

  const picker = document.createElement("select");
  picker.id = "report-picker";
  const dashLink = document.createElement("a");
  dashLink.href = "#/dashboard";
  dashLink.textContent = "Dashboard";
  const issuesLink = document.createElement("a");
  issuesLink.href = "#/issues";
  issuesLink.textContent = "Issues";
  const tokenInput = document.createElement("input");
  tokenInput.type = "password";
  tokenInput.placeholder = "editor token";
  tokenInput.value = stored ?? "";
  tokenInput.addEventListener("change", () => {
    api.setToken(tokenInput.value || null);
    window.localStorage.setItem(TOKEN_KEY, tokenInput.value);
  });
  header.append(picker, issuesLink, dashLink, tokenInput);

  try {
    const reports = await api.reports();
    for (const report of reports) {
      picker.appendChild(option(report.code, `${report.code}: ${report.subject}`));
    }
  } catch {
    header.appendChild(document.createTextNode(" (service unreachable)"));
  }

  const route = async () => {
    const code = picker.value;
    if (window.location.hash.startsWith("#/dashboard")) {
      await new Dashboard(content, api).render();
    } else if (code) {
      const app = new App(content, api, code);
      app.onTokenChange = (token) => {
        tokenInput.value = token;
        window.localStorage.setItem(TOKEN_KEY, token);
      };
      await app.showIssueList();
    } else {
      content.textContent = "No reports registered yet.";
    }
  };

  picker.addEventListener("change", route);
  window.addEventListener("hashchange", route);
  await route();
}

void boot();
