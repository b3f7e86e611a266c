import type { CorrectionDraft, ViewState } from "./state";
import {
  CORRECTABLE_LABELS,
  DOMAIN_NAMES,
  STAGES,
  type ResultDocument,
  type Stage,
  effectiveLabel,
} from "./types";

export interface Handlers {
  onLoadCompany(company: string): void;
  onFilterChange(stage: Stage | null, label: string | null): void;
  onPageChange(page: number): void;
  onDraftChange(headlineId: string, draft: CorrectionDraft): void;
  onApply(headlineId: string): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text !== undefined) node.textContent = text;
  return node;
}

function option(value: string, label = value, selected = false): HTMLOptionElement {
  const node = el("option", { value }, label);
  node.selected = selected;
  return node;
}

// Numbers are rendered with String(), never reformatted, so what the user
// sees is byte-identical to the service response.
function renderScorePanel(state: ViewState): HTMLElement {
  const panel = el("section", { class: "score-panel" });
  panel.appendChild(el("h2", {}, state.company ?? "no company selected"));
  if (!state.score) return panel;
  for (const domain of DOMAIN_NAMES) {
    const entry = state.score.domains[domain];
    const card = el("div", { class: "domain-card", "data-domain": domain });
    card.appendChild(el("h3", {}, domain));
    if (!entry) {
      card.appendChild(el("p", { class: "no-coverage" }, "no coverage"));
    } else {
      card.setAttribute("data-score", String(entry.score));
      card.appendChild(el("p", { class: "score-value" }, String(entry.score)));
      card.appendChild(
        el(
          "p",
          { class: "sentiment-counts" },
          `${String(entry.n_negative)} negative / ` +
            `${String(entry.n_neutral)} neutral / ` +
            `${String(entry.n_positive)} positive`,
        ),
      );
    }
    panel.appendChild(card);
  }
  panel.appendChild(
    el(
      "p",
      { class: "totals" },
      `headlines: ${String(state.score.headline_count)} ` +
        `(scored ${String(state.score.n_scored)}, ` +
        `irrelevant ${String(state.score.n_irrelevant)})`,
    ),
  );
  return panel;
}

function renderControls(state: ViewState, handlers: Handlers): HTMLElement {
  const bar = el("div", { class: "controls" });

  const companyInput = el("input", {
    class: "company-input",
    placeholder: "company name",
    value: state.company ?? "",
  });
  const loadButton = el("button", { class: "load-company" }, "Load");
  loadButton.addEventListener("click", () =>
    handlers.onLoadCompany(companyInput.value.trim()),
  );
  bar.append(companyInput, loadButton);

  const stageSelect = el("select", { class: "stage-filter" });
  stageSelect.appendChild(option("", "all stages", state.stageFilter === null));
  for (const stage of STAGES) {
    stageSelect.appendChild(option(stage, stage, state.stageFilter === stage));
  }
  const labelInput = el("input", {
    class: "label-filter",
    placeholder: "label",
    value: state.labelFilter ?? "",
  });
  const applyFilter = el("button", { class: "apply-filter" }, "Filter");
  applyFilter.addEventListener("click", () => {
    const stage = (stageSelect.value || null) as Stage | null;
    handlers.onFilterChange(stage, labelInput.value.trim() || null);
  });
  bar.append(stageSelect, labelInput, applyFilter);

  if (state.page) {
    const lastPage = Math.max(1, Math.ceil(state.page.total / state.page.page_size));
    const prev = el("button", { class: "page-prev" }, "<");
    const next = el("button", { class: "page-next" }, ">");
    prev.disabled = state.page.page <= 1;
    next.disabled = state.page.page >= lastPage;
    prev.addEventListener("click", () => handlers.onPageChange(state.page!.page - 1));
    next.addEventListener("click", () => handlers.onPageChange(state.page!.page + 1));
    bar.append(
      prev,
      el(
        "span",
        { class: "page-indicator" },
        `page ${String(state.page.page)} of ${String(lastPage)} ` +
          `(${String(state.page.total)} headlines)`,
      ),
      next,
    );
  }
  return bar;
}

function renderRow(
  result: ResultDocument,
  state: ViewState,
  handlers: Handlers,
): HTMLTableRowElement {
  const row = el("tr", { "data-headline-id": result.headline_id });
  row.appendChild(el("td", { class: "headline-text" }, result.text));

  const stagesCell = el("td", { class: "stages" });
  for (const outcome of result.outcomes) {
    const label = effectiveLabel(outcome);
    const chip = el(
      "span",
      { class: "stage-chip", "data-stage": outcome.stage, "data-label": label },
      `${outcome.stage}: ${label}${outcome.correction ? " (corrected)" : ""}`,
    );
    stagesCell.appendChild(chip);
  }
  row.appendChild(stagesCell);

  const terminal = result.terminal;
  const terminalText =
    terminal.kind === "Scored"
      ? `${terminal.kind}: ${terminal.domain} / ${terminal.sentiment}`
      : terminal.kind;
  row.appendChild(
    el("td", { class: "terminal", "data-kind": terminal.kind }, terminalText),
  );

  const reachedStages = result.outcomes.map((o) => o.stage);
  const draft =
    state.drafts.get(result.headline_id) ??
    defaultDraft(reachedStages[reachedStages.length - 1] as Stage);
  const editCell = el("td", { class: "edit" });
  const stageSelect = el("select", { class: "correct-stage" });
  for (const stage of reachedStages) {
    stageSelect.appendChild(option(stage, stage, draft.stage === stage));
  }
  const labelSelect = el("select", { class: "correct-label" });
  for (const label of CORRECTABLE_LABELS[draft.stage]) {
    labelSelect.appendChild(option(label, label, draft.label === label));
  }
  stageSelect.addEventListener("change", () => {
    const stage = stageSelect.value as Stage;
    handlers.onDraftChange(result.headline_id, {
      stage,
      label: CORRECTABLE_LABELS[stage][0]!,
    });
  });
  labelSelect.addEventListener("change", () =>
    handlers.onDraftChange(result.headline_id, {
      stage: draft.stage,
      label: labelSelect.value,
    }),
  );
  const apply = el("button", { class: "apply-correction" }, "Correct");
  apply.addEventListener("click", () => handlers.onApply(result.headline_id));
  editCell.append(stageSelect, labelSelect, apply);
  const rowError = state.rowErrors.get(result.headline_id);
  if (rowError) {
    editCell.appendChild(el("span", { class: "row-error" }, rowError));
  }
  row.appendChild(editCell);
  return row;
}

function defaultDraft(stage: Stage): CorrectionDraft {
  return { stage, label: CORRECTABLE_LABELS[stage][0]! };
}

function renderTable(state: ViewState, handlers: Handlers): HTMLElement {
  const table = el("table", { class: "headlines" });
  const head = el("tr");
  for (const title of ["headline", "stages", "terminal", "correct"]) {
    head.appendChild(el("th", {}, title));
  }
  table.appendChild(head);
  if (state.page) {
    for (const item of state.page.items) {
      table.appendChild(renderRow(item, state, handlers));
    }
  }
  return table;
}

export function render(root: HTMLElement, state: ViewState, handlers: Handlers): void {
  root.replaceChildren();
  root.appendChild(renderControls(state, handlers));
  if (state.globalError) {
    const banner = el("div", { class: "global-error" }, state.globalError);
    if (state.suggestions.length) {
      banner.appendChild(
        el(
          "span",
          { class: "suggestions" },
          ` did you mean: ${state.suggestions.join(", ")}?`,
        ),
      );
    }
    root.appendChild(banner);
  }
  root.appendChild(renderScorePanel(state));
  root.appendChild(renderTable(state, handlers));
}

export { defaultDraft };
