import { describe, expect, test } from "vitest";
import { ApiClient, ApiError, encodePathId, type FetchLike } from "../src/api.js";

interface RecordedCall {
  url: string;
  init: RequestInit | undefined;
}

function stubFetch(
  responder: (url: string) => Response | Promise<Response>,
): { fetchFn: FetchLike; calls: RecordedCall[] } {
  const calls: RecordedCall[] = [];
  const fetchFn: FetchLike = async (url, init) => {
    calls.push({ url, init });
    return responder(url);
  };
  return { fetchFn, calls };
}

const okJson = (body: unknown) =>
  new Response(JSON.stringify(body), {
    status: 200,
    headers: { "Content-Type": "application/json" },
  });

describe("encodePathId", () => {
  test("keeps slashes as path separators", () => {
    expect(encodePathId("prob-1/t003/s02")).toBe("prob-1/t003/s02");
  });

  test("encodes other reserved characters", () => {
    expect(encodePathId("a b/c?d")).toBe("a%20b/c%3Fd");
  });
});

describe("ApiClient urls", () => {
  test("fetchQueue defaults to pending", async () => {
    const { fetchFn, calls } = stubFetch(() => okJson([]));
    await new ApiClient("http://svc:1234", fetchFn).fetchQueue();
    expect(calls[0]?.url).toBe("http://svc:1234/annotations?status=pending");
  });

  test("fetchQueue('all') drops the filter", async () => {
    const { fetchFn, calls } = stubFetch(() => okJson([]));
    await new ApiClient("http://svc:1234", fetchFn).fetchQueue("all");
    expect(calls[0]?.url).toBe("http://svc:1234/annotations");
  });

  test("trailing slashes in the base url are normalized", async () => {
    const { fetchFn, calls } = stubFetch(() => okJson([]));
    await new ApiClient("http://svc:1234///", fetchFn).fetchProblems();
    expect(calls[0]?.url).toBe("http://svc:1234/problems");
  });

  test("hierarchical proof ids keep their slashes", async () => {
    const { fetchFn, calls } = stubFetch(() => okJson({}));
    const api = new ApiClient("http://svc:1234", fetchFn);
    await api.fetchProof("prob-1/t003/s02");
    await api.fetchAnalyses("prob-1/t003/s02");
    expect(calls[0]?.url).toBe("http://svc:1234/proofs/prob-1/t003/s02");
    expect(calls[1]?.url).toBe("http://svc:1234/analyses/prob-1/t003/s02");
  });

  test("submit posts the score and annotator as JSON", async () => {
    const { fetchFn, calls } = stubFetch(() => okJson({ task: {}, record: {} }));
    await new ApiClient("http://svc:1234", fetchFn).submitScore(
      "task-demo-sum/p1",
      "0.5",
      "reviewer-7",
    );
    const call = calls[0];
    expect(call?.url).toBe("http://svc:1234/annotations/task-demo-sum/p1");
    expect(call?.init?.method).toBe("POST");
    expect(call?.init?.headers).toEqual({ "Content-Type": "application/json" });
    expect(JSON.parse(call?.init?.body as string)).toEqual({
      score: "0.5",
      annotator_id: "reviewer-7",
    });
  });
});

describe("ApiClient errors", () => {
  test("structured error bodies carry the server message verbatim", async () => {
    const { fetchFn } = stubFetch(
      () =>
        new Response(
          JSON.stringify({
            error: "task_already_submitted",
            detail: "task 'task-x' was already submitted",
          }),
          { status: 409 },
        ),
    );
    const api = new ApiClient("http://svc:1234", fetchFn);
    const err = await api.fetchQueue().catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    const apiErr = err as ApiError;
    expect(apiErr.status).toBe(409);
    expect(apiErr.code).toBe("task_already_submitted");
    expect(apiErr.detail).toBe("task 'task-x' was already submitted");
    expect(apiErr.isConnectivity).toBe(false);
  });

  test("unstructured error bodies become http_error with the raw text", async () => {
    const { fetchFn } = stubFetch(() => new Response("boom", { status: 502 }));
    const api = new ApiClient("http://svc:1234", fetchFn);
    const err = (await api.fetchProblems().catch((e: unknown) => e)) as ApiError;
    expect(err.status).toBe(502);
    expect(err.code).toBe("http_error");
    expect(err.detail).toBe("boom");
  });

  test("transport failures map to a connectivity error", async () => {
    const fetchFn: FetchLike = async () => {
      throw new TypeError("fetch failed");
    };
    const api = new ApiClient("http://svc:9", fetchFn);
    const err = (await api.fetchQueue().catch((e: unknown) => e)) as ApiError;
    expect(err.status).toBe(0);
    expect(err.code).toBe("unreachable");
    expect(err.isConnectivity).toBe(true);
    expect(err.detail).toContain("http://svc:9/annotations");
    expect(err.detail).toContain("fetch failed");
  });

  test("successful bodies parse as JSON", async () => {
    const { fetchFn } = stubFetch(() => okJson([{ id: "p0" }]));
    const api = new ApiClient("http://svc:1234", fetchFn);
    await expect(api.fetchProblems()).resolves.toEqual([{ id: "p0" }]);
  });
});
