class EventEmitter {
    constructor() {
        this.listeners = new Map();
    }

    on(event, handler) {
        if (!this.listeners.has(event)) {
            this.listeners.set(event, []);
        }
        this.listeners.get(event).push(handler);
        return this;
    }

    off(event, handler) {
        const handlers = this.listeners.get(event);
        if (!handlers) {
            return this;
        }
        const index = handlers.indexOf(handler);
        if (index >= 0) {
            handlers.splice(index, 1);
        }
        return this;
    }

    once(event, handler) {
        const wrapper = (...args) => {
            this.off(event, wrapper);
            handler(...args);
        };
        return this.on(event, wrapper);
    }

    emit(event, ...args) {
        const handlers = this.listeners.get(event);
        if (!handlers || handlers.length === 0) {
            return false;
        }
        for (const handler of [...handlers]) {
            handler(...args);
        }
        return true;
    }
}

function debounce(fn, wait) {
    let timer = null;
    return function (...args) {
        if (timer !== null) {
            clearTimeout(timer);
        }
        timer = setTimeout(() => {
            timer = null;
            fn.apply(this, args);
        }, wait);
    };
}

function groupBy(items, key) {
    const groups = {};
    for (const item of items) {
        const value = item[key];
        if (!(value in groups)) {
            groups[value] = [];
        }
        groups[value].push(item);
    }
    return groups;
}

module.exports = { EventEmitter, debounce, groupBy };
