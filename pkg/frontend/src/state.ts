// Pure view-model state for the selection and ordering screens.
// Everything here is DOM-free and unit-testable.

import type { Paper } from "./api.js";

export const ABSTRACT_EXCERPT_LIMIT = 400;

export function abstractExcerpt(text: string): string {
  if (text.length <= ABSTRACT_EXCERPT_LIMIT) return text;
  return text.slice(0, ABSTRACT_EXCERPT_LIMIT - 1).trimEnd() + "…";
}

/** Checkbox state of the selection screen. Nothing is checked initially
 * and the screen never reorders papers. */
export class SelectionModel {
  private readonly checked = new Set<string>();

  constructor(readonly papers: readonly Paper[]) {}

  isChecked(handle: string): boolean {
    return this.checked.has(handle);
  }

  toggle(handle: string): void {
    if (!this.papers.some((p) => p.handle === handle)) {
      throw new Error(`unknown paper ${handle}`);
    }
    if (this.checked.has(handle)) {
      this.checked.delete(handle);
    } else {
      this.checked.add(handle);
    }
  }

  get checkedCount(): number {
    return this.checked.size;
  }

  get canProceed(): boolean {
    return this.checked.size > 0;
  }

  /** Checked handles in displayed (source) order. */
  checkedHandles(): string[] {
    return this.papers.filter((p) => this.checked.has(p.handle)).map((p) => p.handle);
  }
}

/** Mutable order of the selected papers. The result is always a
 * permutation of a subset of the papers it was constructed with. */
export class OrderingModel {
  private items: Paper[];
  private readonly universe: Set<string>;

  constructor(papers: readonly Paper[]) {
    this.items = [...papers];
    this.universe = new Set(papers.map((p) => p.handle));
  }

  get order(): readonly Paper[] {
    return this.items;
  }

  handles(): string[] {
    return this.items.map((p) => p.handle);
  }

  get size(): number {
    return this.items.length;
  }

  move(from: number, to: number): void {
    if (from < 0 || from >= this.items.length || to < 0 || to >= this.items.length) return;
    const [item] = this.items.splice(from, 1);
    this.items.splice(to, 0, item);
  }

  moveToTop(index: number): void {
    this.move(index, 0);
  }

  remove(handle: string): void {
    this.items = this.items.filter((p) => p.handle !== handle);
  }

  /** True when the current order could be submitted for the given
   * selection; the model keeps this invariant by construction. */
  isPermutationOfSubset(): boolean {
    const handles = this.handles();
    return new Set(handles).size === handles.length && handles.every((h) => this.universe.has(h));
  }
}
