import { describe, expect, test } from 'vitest';

import {
  MAX_TOTAL_BYTES,
  canSubmit,
  missingRoles,
  slotProblem,
  totalSize,
  type FormSlots,
} from '../src/form';
import { UPLOAD_ROLES } from '../src/types';

function fullSlots(size = 1000): FormSlots {
  const slots: FormSlots = {};
  for (const role of UPLOAD_ROLES) {
    slots[role] = { name: `${role}.csv`, size };
  }
  return slots;
}

describe('upload form checks', () => {
  test('submit disabled until all five slots are filled', () => {
    const slots: FormSlots = {};
    expect(canSubmit(slots)).toBe(false);
    for (const role of UPLOAD_ROLES.slice(0, 4)) {
      slots[role] = { name: `${role}.csv`, size: 10 };
      expect(canSubmit(slots)).toBe(false);
    }
    slots.watch_right = { name: 'watch_right.csv', size: 10 };
    expect(canSubmit(slots)).toBe(true);
  });

  test('missing roles are reported in order', () => {
    const slots = fullSlots();
    delete slots.phone_gyro;
    delete slots.watch_left;
    expect(missingRoles(slots)).toEqual(['phone_gyro', 'watch_left']);
  });

  test('extension check rejects non-delimited files', () => {
    expect(slotProblem({ name: 'video.mov', size: 10 })).toMatch(/unsupported/);
    expect(slotProblem({ name: 'data.csv', size: 10 })).toBeNull();
    expect(slotProblem({ name: 'data.TXT', size: 10 })).toBeNull();
    expect(slotProblem({ name: 'noextension', size: 10 })).toMatch(/unsupported/);
  });

  test('empty files are rejected', () => {
    expect(slotProblem({ name: 'empty.csv', size: 0 })).toMatch(/empty/);
    const slots = fullSlots();
    slots.phone_mag = { name: 'phone_mag.csv', size: 0 };
    expect(canSubmit(slots)).toBe(false);
  });

  test('total size cap matches the service limit', () => {
    const slots = fullSlots(MAX_TOTAL_BYTES / 5 + 1);
    expect(totalSize(slots)).toBeGreaterThan(MAX_TOTAL_BYTES);
    expect(canSubmit(slots)).toBe(false);
  });
});
