// Server payload shapes. These mirror the HTTP API exactly; the UI adds
// no derived numeric fields of its own.

export interface DeviceRow {
  guid: string;
  lid: number;
  kind: "edge" | "root" | "compute" | "storage";
  tier: number;
  hostname?: string;
  ip?: string;
  port_count?: number;
}

export interface LinkEndRef {
  guid: string;
  port: number;
}

export interface BundleRef {
  key: string;
  n: number;
  k: number;
  t: number;
}

export interface LinkRow {
  id: number;
  a: LinkEndRef;
  b: LinkEndRef;
  capacity_gbps: number;
  bundle: BundleRef | null;
}

export interface GroupRow {
  id: string;
  switch: string;
  members: string[];
}

export interface GroupLinkRow {
  group: string;
  switch: string;
  link_count: number;
  capacity_gbps: number;
}

export interface TopologyPayload {
  devices: DeviceRow[];
  links: LinkRow[];
  groups: GroupRow[];
  group_links: GroupLinkRow[];
  counts: {
    switches: number;
    hosts: number;
    links: number;
    shown_devices: number;
    shown_links: number;
  };
}

export interface Page<T> {
  total: number;
  limit: number;
  offset: number;
  rows: T[];
}

export interface UtilizationRow {
  link: number;
  interval: number;
  a2b: number;
  b2a: number;
  utilization: number;
  band: string;
  color: string;
}

export type UtilizationPage = Page<UtilizationRow> & {
  metric: string;
  from: number;
  to: number;
  gaps: number[];
};

export interface SideBreakdown {
  total: number;
  mpi: number;
  io: number;
  unicast: number;
  multicast: number;
  jobs: Record<string, { mpi: number; io: number }>;
}

export interface BreakdownInterval {
  interval: number;
  a2b: SideBreakdown;
  b2a: SideBreakdown;
  utilization: number;
  band: string;
  color: string;
}

export interface BreakdownPayload {
  link: number;
  from: number;
  to: number;
  intervals: BreakdownInterval[];
  gaps: number[];
}

export interface RadarAxis {
  axis: string;
  angle: number;
  value: number;
}

export interface RadarRow {
  guid: string;
  mode: string;
  intervals: number[];
  axes: RadarAxis[];
}

export type RadarPage = Page<RadarRow> & {
  mode: string;
  from: number;
  to: number;
};

export interface JobPayload {
  id: number;
  nodes: string[];
  hostnames: string[];
  first_interval: number;
  last_interval: number;
  source: string;
}

export interface RulePayload {
  id: number;
  metric: string;
  comparator: string;
  threshold: number;
  scope: string;
  period: number;
}

export interface EventRow {
  id: number;
  ts: number;
  rule: number;
  kind: string;
  subject: number;
  value: number | number[];
  detail: string;
  interval: number;
  jobs: number[];
}

export type EventsPage = Page<EventRow> & { from: number; to: number };

export interface FrameLink {
  link: number;
  a2b: Omit<SideBreakdown, "jobs">;
  b2a: Omit<SideBreakdown, "jobs">;
  utilization: number;
  band: string;
  color: string;
}

export interface ReplayFrame {
  interval: number;
  ts: number;
  links: FrameLink[];
  events: EventRow[];
}

export interface ReplayPayload {
  from: number;
  to: number;
  step: number;
  frames: ReplayFrame[];
}

export interface FanPoint {
  k: number;
  t: number;
  x: number;
  y: number;
}

export interface FanPayload {
  n: number;
  points: FanPoint[];
}

export interface LegendBand {
  name: string;
  lo: number;
  hi: number | null;
  color: string;
}

export interface StatsPayload {
  pipeline: Record<string, number>;
  store: {
    storage_bytes: number;
    committed_intervals: number;
    last_interval: number | null;
  };
  fabric: { switches: number; hosts: number; links: number };
  watermark: number | null;
}
