/** Coalesces bursts of selection changes into one flush per quiet period.
 *
 * Callers mark endpoint kinds dirty; after `delayMs` without further marks
 * the flush callback runs once with the union of dirty kinds, so a burst of
 * toggles costs at most one request per affected endpoint.
 */

export class DirtySetDebouncer<K> {
  private pending = new Set<K>();
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly delayMs: number,
    private readonly flush: (kinds: Set<K>) => void,
  ) {}

  mark(...kinds: K[]): void {
    for (const kind of kinds) {
      this.pending.add(kind);
    }
    if (this.timer !== null) {
      clearTimeout(this.timer);
    }
    this.timer = setTimeout(() => {
      this.timer = null;
      const kinds = this.pending;
      this.pending = new Set();
      this.flush(kinds);
    }, this.delayMs);
  }

  cancel(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    this.pending.clear();
  }
}
