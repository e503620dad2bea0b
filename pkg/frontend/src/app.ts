// Hash router: "#/" is the public leaderboard, "#/admin" the approval queue.

import { AdminQueue } from "./admin";
import { PortalClient } from "./api";
import { LeaderboardView } from "./leaderboard";

export interface App {
  navigate(hash: string): Promise<void>;
  leaderboard: LeaderboardView;
  admin: AdminQueue;
}

export function createApp(root: HTMLElement, client: PortalClient): App {
  root.innerHTML = `
    <header class="top">
      <h1>Benchmark leaderboard</h1>
      <nav>
        <a href="#/">Leaderboard</a>
        <a href="#/admin">Admin</a>
      </nav>
    </header>
    <main class="outlet"></main>`;
  const outlet = root.querySelector<HTMLElement>(".outlet")!;
  const leaderboard = new LeaderboardView(outlet, client);
  const admin = new AdminQueue(outlet, client);

  async function navigate(hash: string): Promise<void> {
    if (hash.startsWith("#/admin")) {
      await admin.init();
    } else {
      await leaderboard.init();
    }
  }

  return { navigate, leaderboard, admin };
}
