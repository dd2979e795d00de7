// Tiny HTML-string helpers; every interpolated datum goes through esc().

export function esc(value: unknown): string {
  return String(value)
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export function attr(value: unknown): string {
  return `"${esc(value)}"`;
}

export function when(condition: unknown, markup: string): string {
  return condition ? markup : "";
}
