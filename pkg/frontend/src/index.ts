export * from "./api";
export * from "./state";
export * from "./render";
