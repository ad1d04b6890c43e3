/**
 * Trailing debounce for slider input: the callback fires once the value
 * has been idle for `delayMs`, and `flush()` commits immediately (wired
 * to pointer release). One solve per committed change.
 */
export function debounced<T>(
    fn: (value: T) => void,
    delayMs = 150,
): { push: (value: T) => void; flush: () => void; cancel: () => void } {
    let timer: ReturnType<typeof setTimeout> | null = null;
    let last: T | undefined;
    let dirty = false;

    const fire = () => {
        timer = null;
        if (dirty) {
            dirty = false;
            fn(last as T);
        }
    };

    return {
        push(value: T) {
            last = value;
            dirty = true;
            if (timer !== null) {
                clearTimeout(timer);
            }
            timer = setTimeout(fire, delayMs);
        },
        flush() {
            if (timer !== null) {
                clearTimeout(timer);
            }
            fire();
        },
        cancel() {
            if (timer !== null) {
                clearTimeout(timer);
                timer = null;
            }
            dirty = false;
        },
    };
}
