import { ApiClient, ApiError } from "./api";
import { render, type Handlers } from "./render";
import { initialState, type CorrectionDraft, type ViewState } from "./state";
import type { Stage } from "./types";

// Controller for the review dashboard. Every number on screen comes from a
// service response; the client performs no score arithmetic of its own,
// and a correction only updates the page once the service confirms it.
export class ReviewApp {
  state: ViewState = initialState();

  constructor(
    private api: ApiClient,
    private root: HTMLElement,
  ) {
    this.renderNow();
  }

  private handlers: Handlers = {
    onLoadCompany: (company) => void this.viewCompany(company),
    onFilterChange: (stage, label) => void this.setFilter(stage, label),
    onPageChange: (page) => void this.setPage(page),
    onDraftChange: (headlineId, draft) => this.setDraft(headlineId, draft),
    onApply: (headlineId) => void this.applyCorrection(headlineId),
  };

  private renderNow(): void {
    render(this.root, this.state, this.handlers);
  }

  private async refresh(): Promise<void> {
    const { company } = this.state;
    if (!company) return;
    const [score, page] = await Promise.all([
      this.api.score(company),
      this.api.headlines(company, {
        stage: this.state.stageFilter,
        label: this.state.labelFilter,
        page: this.state.pageNumber,
        pageSize: this.state.pageSize,
      }),
    ]);
    this.state.score = score;
    this.state.page = page;
    this.state.globalError = null;
    this.state.suggestions = [];
  }

  async viewCompany(company: string): Promise<void> {
    this.state.company = company;
    this.state.pageNumber = 1;
    this.state.stageFilter = null;
    this.state.labelFilter = null;
    this.state.drafts.clear();
    this.state.rowErrors.clear();
    try {
      await this.refresh();
    } catch (error) {
      this.state.score = null;
      this.state.page = null;
      if (error instanceof ApiError) {
        this.state.globalError = error.payload.message;
        this.state.suggestions = error.payload.suggestions ?? [];
      } else {
        this.state.globalError = String(error);
      }
    }
    this.renderNow();
  }

  async setFilter(stage: Stage | null, label: string | null): Promise<void> {
    this.state.stageFilter = stage;
    this.state.labelFilter = label;
    this.state.pageNumber = 1;
    await this.refresh();
    this.renderNow();
  }

  async setPage(page: number): Promise<void> {
    this.state.pageNumber = Math.max(1, page);
    await this.refresh();
    this.renderNow();
  }

  setDraft(headlineId: string, draft: CorrectionDraft): void {
    this.state.drafts.set(headlineId, draft);
    this.state.rowErrors.delete(headlineId);
    this.renderNow();
  }

  async applyCorrection(headlineId: string, draft?: CorrectionDraft): Promise<void> {
    const chosen = draft ?? this.state.drafts.get(headlineId);
    if (!chosen || !this.state.page) return;
    try {
      const response = await this.api.submitCorrection({
        headline_id: headlineId,
        stage: chosen.stage,
        new_label: chosen.label,
        author: this.state.author,
      });
      // Confirmed write: swap in the row and score from the response in a
      // single render pass.
      this.state.page = {
        ...this.state.page,
        items: this.state.page.items.map((item) =>
          item.headline_id === headlineId ? response.result : item,
        ),
      };
      this.state.score = response.score;
      this.state.drafts.delete(headlineId);
      this.state.rowErrors.delete(headlineId);
    } catch (error) {
      const message =
        error instanceof ApiError ? error.payload.message : String(error);
      this.state.rowErrors.set(headlineId, message);
    }
    this.renderNow();
  }
}

export function mount(root: HTMLElement, baseUrl = ""): ReviewApp {
  return new ReviewApp(new ApiClient(baseUrl), root);
}
