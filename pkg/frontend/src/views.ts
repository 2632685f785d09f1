// Editorial workflow screens: issue list, selection, ordering, send.
// Every screen renders only from API responses; a failed call leaves the
// previous screen in place and shows the error banner instead.

import { ApiError, NepkitApi } from "./api.js";
import type { Paper, PendingIssue, SendResult, Snapshot } from "./api.js";
import { OrderingModel, SelectionModel, abstractExcerpt } from "./state.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export class App {
  readonly banner: HTMLElement;
  readonly main: HTMLElement;
  private selection: SelectionModel | null = null;
  private ordering: OrderingModel | null = null;
  private currentDate: string | null = null;
  onTokenChange: ((token: string) => void) | null = null;

  constructor(
    root: HTMLElement,
    private readonly api: NepkitApi,
    private readonly reportCode: string,
  ) {
    root.textContent = "";
    this.banner = el("div", "error-banner hidden");
    this.main = el("div", "screen");
    root.appendChild(this.banner);
    root.appendChild(this.main);
  }

  private clearBanner(): void {
    this.banner.className = "error-banner hidden";
    this.banner.textContent = "";
  }

  private showError(err: unknown, retry: () => void): void {
    if (err instanceof ApiError && err.status === 401) {
      this.renderLoginPrompt(retry);
      return;
    }
    const text =
      err instanceof ApiError
        ? err.status === 409
          ? `${err.message} (someone else may be editing; reload the issue list)`
          : `${err.code}: ${err.message}`
        : String(err);
    this.banner.textContent = text;
    this.banner.className = "error-banner";
  }

  private renderLoginPrompt(retry: () => void): void {
    this.main.textContent = "";
    const box = el("div", "login-prompt");
    box.appendChild(el("p", undefined, "This report requires an editor token."));
    const input = el("input", "token-input");
    input.type = "password";
    const submit = el("button", "token-submit", "Sign in");
    submit.addEventListener("click", () => {
      this.api.setToken(input.value);
      this.onTokenChange?.(input.value);
      this.clearBanner();
      retry();
    });
    box.appendChild(input);
    box.appendChild(submit);
    this.main.appendChild(box);
  }

  // -- issue list

  async showIssueList(): Promise<void> {
    let issues: PendingIssue[];
    try {
      issues = await this.api.issueList(this.reportCode);
    } catch (err) {
      this.showError(err, () => void this.showIssueList());
      return;
    }
    this.clearBanner();
    this.currentDate = null;
    this.main.textContent = "";
    this.main.appendChild(el("h2", undefined, `Pending issues for ${this.reportCode}`));
    if (issues.length === 0) {
      this.main.appendChild(
        el("p", "empty-state", "Nothing to edit: every issue is sent or deleted."),
      );
      return;
    }
    const list = el("ul", "issue-list");
    for (const issue of issues) {
      const row = el("li", "issue-row");
      row.dataset.date = issue.issue_date;
      row.appendChild(el("span", "issue-date", issue.issue_date));
      for (const action of issue.actions) {
        const button = el("button", `action-${action}`, action);
        button.addEventListener("click", () => {
          if (action === "delete") {
            void this.deleteIssue(issue.issue_date);
          } else {
            void this.beginSelection(issue.issue_date, action as "presorted" | "unsorted");
          }
        });
        row.appendChild(button);
      }
      list.appendChild(row);
    }
    this.main.appendChild(list);
  }

  async deleteIssue(date: string): Promise<void> {
    try {
      await this.api.deleteIssue(this.reportCode, date);
    } catch (err) {
      this.showError(err, () => void this.deleteIssue(date));
      return;
    }
    await this.showIssueList();
  }

  // -- selection screen

  async beginSelection(date: string, mode: "presorted" | "unsorted"): Promise<void> {
    let snapshot: Snapshot;
    try {
      snapshot = await this.api.openIssue(this.reportCode, date, mode);
    } catch (err) {
      this.showError(err, () => void this.beginSelection(date, mode));
      return;
    }
    this.clearBanner();
    this.currentDate = date;
    this.selection = new SelectionModel(snapshot.papers);
    this.renderSelectionScreen(snapshot);
  }

  private renderSelectionScreen(snapshot: Snapshot): void {
    const model = this.selection!;
    this.main.textContent = "";
    this.main.appendChild(
      el(
        "h2",
        undefined,
        `Select papers: ${snapshot.issue_date} (${snapshot.mode}, v${snapshot.version})`,
      ),
    );

    const proceed = el("button", "proceed-btn", "Proceed to ordering");
    const affordance = el("div", "delete-affordance");
    affordance.appendChild(
      el("span", undefined, "No papers selected; the issue cannot advance. "),
    );
    const deleteButton = el("button", "delete-issue", "Delete this issue");
    deleteButton.addEventListener("click", () => void this.deleteIssue(snapshot.issue_date));
    affordance.appendChild(deleteButton);

    const sync = () => {
      proceed.disabled = !model.canProceed;
      affordance.className = model.canProceed
        ? "delete-affordance hidden"
        : "delete-affordance";
    };

    const list = el("ul", "paper-list");
    for (const paper of snapshot.papers) {
      const card = el("li", "paper-card");
      card.dataset.handle = paper.handle;
      const label = el("label");
      const checkbox = el("input", "paper-checkbox");
      checkbox.type = "checkbox";
      checkbox.checked = false;
      checkbox.addEventListener("change", () => {
        model.toggle(paper.handle);
        sync();
      });
      label.appendChild(checkbox);
      label.appendChild(el("span", "paper-position", String(paper.source_position)));
      label.appendChild(el("span", "paper-title", paper.title));
      card.appendChild(label);
      if (paper.authors.length > 0) {
        card.appendChild(el("div", "paper-authors", paper.authors.join(", ")));
      }
      if (paper.abstract) {
        card.appendChild(el("p", "paper-abstract", abstractExcerpt(paper.abstract)));
      }
      list.appendChild(card);
    }
    this.main.appendChild(list);

    proceed.addEventListener("click", () => void this.proceedToOrdering());
    const back = el("button", "back-btn", "Back to issues");
    back.addEventListener("click", () => void this.showIssueList());
    const controls = el("div", "controls");
    controls.appendChild(proceed);
    controls.appendChild(back);
    this.main.appendChild(controls);
    this.main.appendChild(affordance);
    sync();
  }

  async proceedToOrdering(): Promise<void> {
    const model = this.selection;
    if (!model || !this.currentDate || !model.canProceed) return;
    let snapshot: Snapshot;
    try {
      snapshot = await this.api.submitSelection(
        this.reportCode,
        this.currentDate,
        model.checkedHandles(),
      );
    } catch (err) {
      this.showError(err, () => void this.proceedToOrdering());
      return;
    }
    this.clearBanner();
    this.ordering = new OrderingModel(snapshot.papers);
    this.renderOrderingScreen();
  }

  // -- ordering screen

  private renderOrderingScreen(): void {
    const model = this.ordering!;
    this.main.textContent = "";
    this.main.appendChild(el("h2", undefined, `Order papers: ${this.currentDate}`));
    this.main.appendChild(
      el("p", "hint", "Drag rows or use the buttons; remove papers that no longer fit."),
    );
    const list = el("ul", "ordering-list");

    const redraw = () => {
      list.textContent = "";
      model.order.forEach((paper: Paper, index: number) => {
        const item = el("li", "ordering-item");
        item.dataset.handle = paper.handle;
        item.draggable = true;
        item.addEventListener("dragstart", (event) => {
          event.dataTransfer?.setData("text/plain", String(index));
        });
        item.addEventListener("dragover", (event) => event.preventDefault());
        item.addEventListener("drop", (event) => {
          event.preventDefault();
          const from = Number(event.dataTransfer?.getData("text/plain"));
          if (!Number.isNaN(from)) {
            model.move(from, index);
            redraw();
          }
        });
        item.appendChild(el("span", "ordering-position", String(index + 1)));
        item.appendChild(el("span", "paper-title", paper.title));
        const top = el("button", "move-top", "top");
        top.addEventListener("click", () => {
          model.moveToTop(index);
          redraw();
        });
        const up = el("button", "move-up", "up");
        up.addEventListener("click", () => {
          model.move(index, index - 1);
          redraw();
        });
        const down = el("button", "move-down", "down");
        down.addEventListener("click", () => {
          model.move(index, index + 1);
          redraw();
        });
        const remove = el("button", "remove-item", "remove");
        remove.addEventListener("click", () => {
          model.remove(paper.handle);
          redraw();
        });
        for (const button of [top, up, down, remove]) item.appendChild(button);
        list.appendChild(item);
      });
    };
    redraw();
    this.main.appendChild(list);

    const confirm = el("button", "confirm-order-btn", "Confirm order");
    confirm.addEventListener("click", () => void this.confirmOrdering());
    this.main.appendChild(confirm);
  }

  async confirmOrdering(): Promise<void> {
    const model = this.ordering;
    if (!model || !this.currentDate || model.size === 0) return;
    let snapshot: Snapshot;
    try {
      snapshot = await this.api.submitOrdering(
        this.reportCode,
        this.currentDate,
        model.handles(),
      );
    } catch (err) {
      this.showError(err, () => void this.confirmOrdering());
      return;
    }
    this.clearBanner();
    this.renderSendConfirmation(snapshot);
  }

  // -- send

  private renderSendConfirmation(snapshot: Snapshot): void {
    this.main.textContent = "";
    this.main.appendChild(el("h2", undefined, `Ready to send: ${snapshot.issue_date}`));
    const list = el("ol", "confirm-list");
    for (const paper of snapshot.papers) {
      const item = el("li", "confirm-item", paper.title);
      item.dataset.handle = paper.handle;
      list.appendChild(item);
    }
    this.main.appendChild(list);
    const send = el("button", "send-btn", "Send issue");
    send.addEventListener("click", () => void this.send());
    this.main.appendChild(send);
  }

  async send(): Promise<void> {
    if (!this.currentDate) return;
    let result: SendResult;
    try {
      result = await this.api.sendIssue(this.reportCode, this.currentDate);
    } catch (err) {
      this.showError(err, () => void this.send());
      return;
    }
    this.clearBanner();
    this.renderSentSummary(result);
  }

  private renderSentSummary(result: SendResult): void {
    // rendered from the API response only: what you see is what was sent
    const snapshot = result.snapshot;
    this.main.textContent = "";
    this.main.appendChild(el("h2", undefined, `Sent ${snapshot.report_code}/${snapshot.issue_date}`));
    this.main.appendChild(
      el(
        "p",
        "sent-meta",
        `${snapshot.papers.length} papers delivered to ${result.delivered} subscribers.`,
      ),
    );
    const list = el("ol", "sent-summary");
    for (const paper of snapshot.papers) {
      const item = el("li", "sent-item", paper.title);
      item.dataset.handle = paper.handle;
      list.appendChild(item);
    }
    this.main.appendChild(list);
    const back = el("button", "back-btn", "Back to issues");
    back.addEventListener("click", () => void this.showIssueList());
    this.main.appendChild(back);
  }
}
