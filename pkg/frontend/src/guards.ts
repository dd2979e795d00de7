// Mirror of the relationship state machine: a control is enabled exactly when
// the corresponding API transition is legal in that state. Closing is legal
// from every live state (it is idempotent on Closed, so the button goes dark
// there); sharing and pulling need an active collaboration.

export interface DashboardControls {
  define: boolean;
  collaborate: boolean;
  close: boolean;
  grant: boolean;
  pull: boolean;
}

export const STATES = ["Analysis", "Defining", "Collaborating", "Closed"] as const;

export function transitionControls(state: string): DashboardControls {
  return {
    define: state === "Analysis",
    collaborate: state === "Defining",
    close: state !== "Closed",
    grant: state === "Collaborating",
    pull: state === "Collaborating",
  };
}
