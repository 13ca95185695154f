// Client tests against a mocked fetch.

import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiError, ServiceClient } from "../src/api.js";

function mockFetch(status: number, body: unknown): void {
  globalThis.fetch = vi.fn(async () => ({
    ok: status >= 200 && status < 300,
    status,
    statusText: `HTTP ${status}`,
    json: async () => body,
  })) as unknown as typeof fetch;
}

afterEach(() => {
  vi.restoreAllMocks();
});

describe("ServiceClient", () => {
  it("posts the session mode and returns the payload", async () => {
    mockFetch(200, { session_id: "s1", agent_text: "hello" });
    const client = new ServiceClient("http://svc");
    const payload = await client.createSession("sample");
    expect(payload.session_id).toBe("s1");
    const call = (globalThis.fetch as ReturnType<typeof vi.fn>).mock.calls[0];
    expect(call[0]).toBe("http://svc/api/session");
    expect(JSON.parse((call[1] as RequestInit).body as string)).toEqual({
      mode: "sample",
    });
  });

  it("surfaces HTTP errors with the service detail", async () => {
    mockFetch(409, { detail: "session is closed-failure" });
    const client = new ServiceClient("");
    await expect(client.postMessage("s1", "hi")).rejects.toThrowError(ApiError);
    await expect(client.postMessage("s1", "hi")).rejects.toThrow("closed-failure");
  });

  it("maps network failures to status 0", async () => {
    globalThis.fetch = vi.fn(async () => {
      throw new TypeError("connection refused");
    }) as unknown as typeof fetch;
    const client = new ServiceClient("");
    try {
      await client.info();
      expect.unreachable();
    } catch (err) {
      expect(err).toBeInstanceOf(ApiError);
      expect((err as ApiError).status).toBe(0);
      expect((err as ApiError).message).toContain("unreachable");
    }
  });

  it("sends feedback judgments", async () => {
    mockFetch(200, { logged_reward: 9, turns: 6, duplicate: false });
    const client = new ServiceClient("");
    const ack = await client.submitFeedback("s1", true);
    expect(ack.logged_reward).toBe(9);
    const call = (globalThis.fetch as ReturnType<typeof vi.fn>).mock.calls[0];
    expect(call[0]).toBe("/api/session/s1/feedback");
  });
});
