//! Machine-readable `key=value` records and aligned human tables.

pub trait Record {
    fn fields(&self) -> Vec<(&'static str, String)>;
}

pub fn render_records<T: Record + ?Sized>(record: &T) -> String {
    record.fields().into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

pub fn render_table<T: Record + ?Sized>(record: &T) -> String {
    let fields = record.fields();
    let width = fields.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    fields.into_iter().map(|(k, v)| format!("{k:<width$}  {v}\n")).collect()
}
