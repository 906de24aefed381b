/** Bind keyboard shortcuts; returns an unbind function. Ignores typing in form fields. */
export function bindHotkeys(
  target: Pick<Window, "addEventListener" | "removeEventListener">,
  bindings: Record<string, () => void>,
): () => void {
  const handler = (event: Event) => {
    const keyboard = event as KeyboardEvent;
    const element = keyboard.target as HTMLElement | null;
    if (element && ["INPUT", "TEXTAREA", "SELECT"].includes(element.tagName)) return;
    const action = bindings[keyboard.key.toLowerCase()];
    if (action) {
      keyboard.preventDefault();
      action();
    }
  };
  target.addEventListener("keydown", handler);
  return () => target.removeEventListener("keydown", handler);
}
