import { describe, expect, it } from "vitest";

import { CommandSender } from "../src/commands.js";

const jsonResponse = (status: number, body: unknown): Response =>
  new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });

describe("CommandSender", () => {
  it("posts the command body and resolves on acknowledgement", async () => {
    let captured: { url: string; body: string } | null = null;
    const sender = new CommandSender("/command", async (url, init) => {
      captured = { url, body: init?.body ?? "" };
      return jsonResponse(200, { accepted: true, kind: "set-setpoint" });
    });
    const result = await sender.send("set-setpoint", 21.5);
    expect(result).toEqual({ ok: true, detail: "" });
    expect(captured!.url).toBe("/command");
    expect(JSON.parse(captured!.body)).toEqual({ kind: "set-setpoint", value: 21.5 });
  });

  it("passes rejection messages through verbatim", async () => {
    const sender = new CommandSender("/command", async () =>
      jsonResponse(400, { detail: "setpoint 40.0 outside safe range 5.0..35.0" }),
    );
    const result = await sender.send("set-setpoint", 40);
    expect(result.ok).toBe(false);
    expect(result.detail).toBe("setpoint 40.0 outside safe range 5.0..35.0");
  });

  it("refuses a second command of the same kind while one is in flight", async () => {
    let release: (() => void) | null = null;
    const sender = new CommandSender("/command", async () => {
      await new Promise<void>((resolve) => {
        release = resolve;
      });
      return jsonResponse(200, { accepted: true });
    });
    const first = sender.send("pause");
    expect(sender.isBusy("pause")).toBe(true);
    const second = await sender.send("pause");
    expect(second.ok).toBe(false);
    expect(second.detail).toContain("awaiting acknowledgement");
    // a different kind is not blocked
    expect(sender.isBusy("resume")).toBe(false);
    release!();
    expect((await first).ok).toBe(true);
    expect(sender.isBusy("pause")).toBe(false);
  });

  it("times out and re-enables the control", async () => {
    const sender = new CommandSender(
      "/command",
      (_url, init) =>
        new Promise<Response>((_resolve, reject) => {
          init?.signal?.addEventListener("abort", () => {
            const err = new Error("aborted");
            err.name = "AbortError";
            reject(err);
          });
        }),
      20,
    );
    const result = await sender.send("resume");
    expect(result).toEqual({ ok: false, detail: "command timed out" });
    expect(sender.isBusy("resume")).toBe(false);
  });

  it("reports transport errors without throwing", async () => {
    const sender = new CommandSender("/command", async () => {
      throw new Error("connection refused");
    });
    const result = await sender.send("set-speed", 60);
    expect(result.ok).toBe(false);
    expect(result.detail).toContain("connection refused");
  });
});
