import type { ValueSchemaDoc } from "./types.js";

/** Raised when a value fails its domain-type predicate. */
export class SchemaError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SchemaError";
  }
}

function isFiniteNumber(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

/**
 * Validate and canonicalize a wire value against its schema document.
 * Enforces the same predicates the service applies, so malformed arguments
 * are rejected in the form instead of producing a service round trip.
 */
export function canonValue(schema: ValueSchemaDoc, value: unknown): unknown {
  switch (schema.kind) {
    case "number": {
      if (!isFiniteNumber(value)) {
        throw new SchemaError(`expected a finite number, got ${describeValue(value)}`);
      }
      if (schema.min !== undefined && value < schema.min) {
        throw new SchemaError(`number ${value} below minimum ${schema.min}`);
      }
      if (schema.max !== undefined && value > schema.max) {
        throw new SchemaError(`number ${value} above maximum ${schema.max}`);
      }
      return value;
    }
    case "integer": {
      if (typeof value !== "number" || !Number.isInteger(value)) {
        throw new SchemaError(`expected an integer, got ${describeValue(value)}`);
      }
      if (schema.min !== undefined && value < schema.min) {
        throw new SchemaError(`integer ${value} below minimum ${schema.min}`);
      }
      if (schema.max !== undefined && value > schema.max) {
        throw new SchemaError(`integer ${value} above maximum ${schema.max}`);
      }
      return value;
    }
    case "string": {
      if (typeof value !== "string") {
        throw new SchemaError(`expected a string, got ${describeValue(value)}`);
      }
      if (!schema.allow_empty && value === "") {
        throw new SchemaError("string must be non-empty");
      }
      return value;
    }
    case "boolean": {
      if (typeof value !== "boolean") {
        throw new SchemaError(`expected a boolean, got ${describeValue(value)}`);
      }
      return value;
    }
    case "choice": {
      if (typeof value !== "string" || !schema.options.includes(value)) {
        throw new SchemaError(
          `expected one of ${schema.options.join(", ")}, got ${describeValue(value)}`,
        );
      }
      return value;
    }
    case "position": {
      if (!Array.isArray(value) || value.length !== 3) {
        throw new SchemaError("expected a position [x, y, z]");
      }
      if (!value.every(isFiniteNumber)) {
        throw new SchemaError("position coordinates must be finite numbers");
      }
      return value.map(Number);
    }
    case "record": {
      if (typeof value !== "object" || value === null || Array.isArray(value)) {
        throw new SchemaError(`expected a record, got ${describeValue(value)}`);
      }
      const obj = value as Record<string, unknown>;
      const expected = Object.keys(schema.fields);
      const extra = Object.keys(obj).filter((k) => !expected.includes(k));
      if (extra.length > 0) {
        throw new SchemaError(`unexpected record fields ${extra.sort().join(", ")}`);
      }
      const out: Record<string, unknown> = {};
      for (const [name, fieldSchema] of Object.entries(schema.fields)) {
        if (!(name in obj)) {
          throw new SchemaError(`missing record field '${name}'`);
        }
        try {
          out[name] = canonValue(fieldSchema, obj[name]);
        } catch (exc) {
          throw new SchemaError(`field '${name}': ${(exc as Error).message}`);
        }
      }
      return out;
    }
    case "list": {
      if (!Array.isArray(value)) {
        throw new SchemaError(`expected a list, got ${describeValue(value)}`);
      }
      if (value.length < schema.min_len) {
        throw new SchemaError(`list needs at least ${schema.min_len} items`);
      }
      if (schema.max_len !== undefined && value.length > schema.max_len) {
        throw new SchemaError(`list allows at most ${schema.max_len} items`);
      }
      return value.map((item, i) => {
        try {
          return canonValue(schema.item, item);
        } catch (exc) {
          throw new SchemaError(`item ${i}: ${(exc as Error).message}`);
        }
      });
    }
  }
}

/** Like canonValue but returns the failure message instead of throwing. */
export function checkValue(schema: ValueSchemaDoc, value: unknown): string | null {
  try {
    canonValue(schema, value);
    return null;
  } catch (exc) {
    return (exc as Error).message;
  }
}

function describeValue(v: unknown): string {
  if (v === null) return "null";
  if (Array.isArray(v)) return "a list";
  if (typeof v === "string") return JSON.stringify(v);
  return typeof v === "object" ? "a record" : String(v);
}

/**
 * Parse the raw text of a scalar form input into the value the schema
 * expects. Compound kinds (record, list, position) arrive as JSON text.
 */
export function parseFieldText(
  schema: ValueSchemaDoc,
  raw: string,
): { value: unknown } | { error: string } {
  switch (schema.kind) {
    case "number":
    case "integer": {
      const trimmed = raw.trim();
      if (trimmed === "") return { error: "enter a number" };
      const num = Number(trimmed);
      if (!Number.isFinite(num)) return { error: `'${trimmed}' is not a number` };
      return { value: num };
    }
    case "string":
    case "choice":
      return { value: raw };
    case "boolean":
      // checkboxes bypass this path; accept literal text as a fallback
      if (raw === "true") return { value: true };
      if (raw === "false") return { value: false };
      return { error: "enter true or false" };
    case "position":
    case "record":
    case "list": {
      try {
        return { value: JSON.parse(raw) as unknown };
      } catch {
        return { error: "not valid JSON" };
      }
    }
  }
}

/** A plausible prefill value satisfying the schema, used to prime forms. */
export function templateFor(schema: ValueSchemaDoc): unknown {
  switch (schema.kind) {
    case "number":
    case "integer": {
      if (schema.min !== undefined) return schema.min;
      if (schema.max !== undefined) return Math.min(0, schema.max);
      return 0;
    }
    case "string":
      return schema.allow_empty ? "" : "text";
    case "boolean":
      return true;
    case "choice":
      return schema.options[0] ?? "";
    case "position":
      return [0, 0, 0];
    case "record": {
      const out: Record<string, unknown> = {};
      for (const [name, field] of Object.entries(schema.fields)) {
        out[name] = templateFor(field);
      }
      return out;
    }
    case "list": {
      const n = Math.max(schema.min_len, 1);
      return Array.from({ length: n }, () => templateFor(schema.item));
    }
  }
}
