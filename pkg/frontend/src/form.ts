/** Client-side checks for the five-slot upload form. */

import { UPLOAD_ROLES, type UploadRole } from './types.js';

/** Matches the service's total upload cap. */
export const MAX_TOTAL_BYTES = 64 * 1024 * 1024;
export const ALLOWED_EXTENSIONS = ['.csv', '.txt'];

export interface SlotFile {
  name: string;
  size: number;
}

export type FormSlots = Partial<Record<UploadRole, SlotFile>>;

export function slotProblem(file: SlotFile): string | null {
  const dot = file.name.lastIndexOf('.');
  const extension = dot >= 0 ? file.name.slice(dot).toLowerCase() : '';
  if (!ALLOWED_EXTENSIONS.includes(extension)) {
    return `unsupported file type ${extension || '(none)'}; expected ${ALLOWED_EXTENSIONS.join(' or ')}`;
  }
  if (file.size === 0) {
    return 'file is empty';
  }
  return null;
}

export function totalSize(slots: FormSlots): number {
  return Object.values(slots).reduce((sum, f) => sum + (f?.size ?? 0), 0);
}

/** Submit is enabled only when all five slots hold acceptable files. */
export function canSubmit(slots: FormSlots): boolean {
  for (const role of UPLOAD_ROLES) {
    const file = slots[role];
    if (!file || slotProblem(file) !== null) {
      return false;
    }
  }
  return totalSize(slots) <= MAX_TOTAL_BYTES;
}

export function missingRoles(slots: FormSlots): UploadRole[] {
  return UPLOAD_ROLES.filter((role) => !slots[role]);
}
