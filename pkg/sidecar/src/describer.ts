/**
 * Activity describers behind the /describe contract.
 *
 * UpstreamDescriber forwards the two crops and prompts to an OpenAI-compatible
 * chat-completions endpoint (a real multimodal model); StubDescriber is the
 * offline fallback that produces a deterministic, non-empty sentence from a
 * digest of the inputs so contract tests and air-gapped runs work without a
 * model. Select via EXEMVAD_SIDECAR_UPSTREAM_URL.
 */

import { createHash } from "node:crypto";

export class ImageDecodeError extends Error {}
export class UpstreamError extends Error {}

export interface DescribeInput {
  imageT: Buffer;
  imageT2: Buffer;
  system: string;
  user: string;
  deterministic: boolean;
}

export interface Describer {
  readonly modelId: string;
  describe(input: DescribeInput): Promise<string>;
}

const PNG_MAGIC = Buffer.from([0x89, 0x50, 0x4e, 0x47]);
const JPEG_MAGIC = Buffer.from([0xff, 0xd8, 0xff]);

export function decodeImageField(value: string, field: string): Buffer {
  let raw: Buffer;
  try {
    raw = Buffer.from(value, "base64");
  } catch {
    throw new ImageDecodeError(`${field} is not valid base64`);
  }
  // Buffer.from silently ignores junk; round-trip to catch truncated input
  if (raw.length === 0 || raw.toString("base64").replace(/=+$/, "") !== value.replace(/[\s=]+/g, "")) {
    throw new ImageDecodeError(`${field} is not valid base64`);
  }
  if (!raw.subarray(0, 4).equals(PNG_MAGIC) && !raw.subarray(0, 3).equals(JPEG_MAGIC)) {
    throw new ImageDecodeError(`${field} does not decode to a PNG or JPEG image`);
  }
  return raw;
}

/** Deterministic offline describer: object name from the prompt plus a stable
 * digest of both crops, phrased as a single sentence. */
export class StubDescriber implements Describer {
  readonly modelId = "stub-digest-v1";

  describe(input: DescribeInput): Promise<string> {
    const digest = createHash("sha256")
      .update(input.imageT)
      .update(input.imageT2)
      .update(input.user)
      .digest("hex")
      .slice(0, 8);
    const match = input.user.match(/what the (.+?) in the enclosed/);
    const subject = match ? match[1] : "objects";
    return Promise.resolve(
      `The ${subject} in the marked region can be seen in both frames without clear change (scene signature ${digest}).`
    );
  }
}

interface UpstreamOptions {
  url: string;
  apiKey?: string;
  model?: string;
  timeoutMs?: number;
}

/** Forwards to an OpenAI-compatible /chat/completions endpoint with both
 * crops attached as data URLs; greedy decoding when deterministic is set. */
export class UpstreamDescriber implements Describer {
  readonly modelId: string;
  private readonly options: UpstreamOptions;

  constructor(options: UpstreamOptions) {
    this.options = options;
    this.modelId = `upstream:${options.model ?? "default"}`;
  }

  async describe(input: DescribeInput): Promise<string> {
    const body = {
      model: this.options.model ?? "default",
      temperature: input.deterministic ? 0 : 1,
      messages: [
        { role: "system", content: input.system },
        {
          role: "user",
          content: [
            { type: "text", text: input.user },
            {
              type: "image_url",
              image_url: { url: `data:image/png;base64,${input.imageT.toString("base64")}` },
            },
            {
              type: "image_url",
              image_url: { url: `data:image/png;base64,${input.imageT2.toString("base64")}` },
            },
          ],
        },
      ],
    };
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (this.options.apiKey) {
      headers.Authorization = `Bearer ${this.options.apiKey}`;
    }
    let response: Response;
    try {
      response = await fetch(this.options.url, {
        method: "POST",
        headers,
        body: JSON.stringify(body),
        signal: AbortSignal.timeout(this.options.timeoutMs ?? 120_000),
      });
    } catch (err) {
      throw new UpstreamError(`upstream model unreachable: ${String(err)}`);
    }
    if (!response.ok) {
      throw new UpstreamError(`upstream model returned ${response.status}`);
    }
    const payload = (await response.json()) as {
      choices?: { message?: { content?: string } }[];
    };
    const text = payload.choices?.[0]?.message?.content?.trim();
    if (!text) {
      throw new UpstreamError("upstream model returned no text");
    }
    return text;
  }
}

export function describerFromEnv(env: NodeJS.ProcessEnv = process.env): Describer {
  const url = env.EXEMVAD_SIDECAR_UPSTREAM_URL;
  if (url) {
    return new UpstreamDescriber({
      url,
      apiKey: env.EXEMVAD_API_KEY,
      model: env.EXEMVAD_SIDECAR_UPSTREAM_MODEL,
    });
  }
  return new StubDescriber();
}
