import type { CommandKind, CommandResult } from "./types.js";

type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string; signal?: AbortSignal },
) => Promise<Response>;

/**
 * Serializes control commands to the service. While a command of some kind
 * is in flight, further commands of the same kind are refused so the bound
 * control stays disabled until the acknowledgement (or timeout) arrives.
 * Rejection messages are passed through verbatim.
 */
export class CommandSender {
  private inFlight = new Set<CommandKind>();

  constructor(
    private readonly url: string,
    private readonly fetchImpl: FetchLike = fetch,
    private readonly timeoutMs = 5000,
  ) {}

  isBusy(kind: CommandKind): boolean {
    return this.inFlight.has(kind);
  }

  async send(kind: CommandKind, value?: number | string): Promise<CommandResult> {
    if (this.inFlight.has(kind)) {
      return { ok: false, detail: `${kind} still awaiting acknowledgement` };
    }
    this.inFlight.add(kind);
    const controller = new AbortController();
    const timer = setTimeout(() => controller.abort(), this.timeoutMs);
    try {
      const response = await this.fetchImpl(this.url, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ kind, value: value ?? null }),
        signal: controller.signal,
      });
      if (response.ok) {
        return { ok: true, detail: "" };
      }
      const body = (await response.json().catch(() => null)) as { detail?: string } | null;
      return { ok: false, detail: body?.detail ?? `command rejected (${response.status})` };
    } catch (err) {
      const aborted = err instanceof Error && err.name === "AbortError";
      return { ok: false, detail: aborted ? "command timed out" : String(err) };
    } finally {
      clearTimeout(timer);
      this.inFlight.delete(kind);
    }
  }
}
