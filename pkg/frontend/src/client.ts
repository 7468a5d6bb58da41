// WebSocket client with capped exponential-backoff reconnect. The socket
// constructor is injectable so the protocol tests can run under node.

export interface SocketLike {
  send(data: string): void;
  close(): void;
  addEventListener(type: string, handler: (ev: any) => void): void;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ClientOptions {
  url: string;
  onMessage: (msg: unknown) => void;
  onStatus: (status: "connecting" | "open" | "closed") => void;
  makeSocket?: SocketFactory;
  // initial reconnect delay in ms; doubles per failure, capped at 8s
  reconnectMs?: number;
}

export class LiveClient {
  private socket: SocketLike | null = null;
  private closed = false;
  private retryMs: number;
  private readonly baseRetryMs: number;

  constructor(private readonly opts: ClientOptions) {
    this.baseRetryMs = opts.reconnectMs ?? 500;
    this.retryMs = this.baseRetryMs;
    this.open();
  }

  private open() {
    const make: SocketFactory =
      this.opts.makeSocket ?? ((url) => new WebSocket(url) as unknown as SocketLike);
    this.opts.onStatus("connecting");
    const socket = make(this.opts.url);
    this.socket = socket;

    socket.addEventListener("open", () => {
      this.retryMs = this.baseRetryMs;
      this.opts.onStatus("open");
    });
    socket.addEventListener("message", (ev: { data: unknown }) => {
      try {
        this.opts.onMessage(JSON.parse(String(ev.data)));
      } catch {
        this.opts.onMessage({ type: "error", detail: "unparseable frame" });
      }
    });
    socket.addEventListener("close", () => {
      this.opts.onStatus("closed");
      if (!this.closed) {
        setTimeout(() => this.open(), this.retryMs);
        this.retryMs = Math.min(this.retryMs * 2, 8000);
      }
    });
    socket.addEventListener("error", () => {
      // close fires next and owns the reconnect
    });
  }

  /** Send one command object; false when the socket is not usable. */
  send(cmd: Record<string, unknown>): boolean {
    if (this.socket === null) return false;
    try {
      this.socket.send(JSON.stringify(cmd));
      return true;
    } catch {
      return false;
    }
  }

  close() {
    this.closed = true;
    this.socket?.close();
  }
}
