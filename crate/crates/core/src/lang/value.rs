//! Runtime values, identifiers, variable maps and memories.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::int::Int;

/// A variable name. Cheap to clone and safe to share across threads.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ident(Arc<str>);

impl Ident {
    pub fn new(s: &str) -> Ident {
        Ident(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::ops::Deref for Ident {
    type Target = str;
    fn deref(&self) -> &str {
        &self.0
    }
}

impl std::borrow::Borrow<str> for Ident {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Ident {
    fn from(s: &str) -> Ident {
        Ident::new(s)
    }
}

impl From<String> for Ident {
    fn from(s: String) -> Ident {
        Ident(Arc::from(s))
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl serde::Serialize for Ident {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> serde::Deserialize<'de> for Ident {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Ident, D::Error> {
        let s = <String as serde::Deserialize>::deserialize(d)?;
        Ok(Ident::from(s))
    }
}

/// An immutable list with O(1) tail.
#[derive(Clone)]
pub struct List {
    items: Arc<[Value]>,
    start: usize,
}

impl List {
    pub fn new(items: Vec<Value>) -> List {
        List { items: items.into(), start: 0 }
    }

    pub fn as_slice(&self) -> &[Value] {
        &self.items[self.start..]
    }

    pub fn len(&self) -> usize {
        self.items.len() - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn head(&self) -> Option<&Value> {
        self.as_slice().first()
    }

    pub fn tail(&self) -> Option<List> {
        if self.is_empty() {
            None
        } else {
            Some(List { items: self.items.clone(), start: self.start + 1 })
        }
    }

    pub fn concat(&self, other: &List) -> List {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(self.as_slice());
        v.extend_from_slice(other.as_slice());
        List::new(v)
    }
}

impl PartialEq for List {
    fn eq(&self, other: &List) -> bool {
        self.as_slice() == other.as_slice()
    }
}

impl Eq for List {}

impl std::hash::Hash for List {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.as_slice().hash(state)
    }
}

impl fmt::Debug for List {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

/// A runtime value: an integer, a boolean or a list of values.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Int(Int),
    Bool(bool),
    List(List),
}

impl Value {
    pub fn int(v: i64) -> Value {
        Value::Int(Int::small(v))
    }

    pub fn list(items: Vec<Value>) -> Value {
        Value::List(List::new(items))
    }

    pub fn as_int(&self) -> Option<&Int> {
        match self {
            Value::Int(i) => Some(i),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&List> {
        match self {
            Value::List(l) => Some(l),
            _ => None,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Bool(_) => "bool",
            Value::List(_) => "list",
        }
    }
}

impl Default for Value {
    fn default() -> Value {
        Value::Int(Int::ZERO)
    }
}

impl From<Int> for Value {
    fn from(v: Int) -> Value {
        Value::Int(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Value {
        Value::Bool(v)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::List(l) => {
                f.write_str("[")?;
                for (k, v) in l.as_slice().iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl serde::Serialize for Value {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Int(i) => i.serialize(s),
            Value::Bool(b) => s.serialize_bool(*b),
            Value::List(l) => s.collect_seq(l.as_slice()),
        }
    }
}

impl<'de> serde::Deserialize<'de> for Value {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Value, D::Error> {
        struct V;
        impl<'de> serde::de::Visitor<'de> for V {
            type Value = Value;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an integer, a boolean or a list")
            }
            fn visit_bool<E: serde::de::Error>(self, v: bool) -> Result<Value, E> {
                Ok(Value::Bool(v))
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<Value, E> {
                Ok(Value::int(v))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<Value, E> {
                Ok(Value::Int(Int::from(num_bigint::BigInt::from(v))))
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<Value, E> {
                v.parse::<Int>().map(Value::Int).map_err(E::custom)
            }
            fn visit_seq<A: serde::de::SeqAccess<'de>>(self, mut a: A) -> Result<Value, A::Error> {
                let mut items = Vec::new();
                while let Some(v) = a.next_element()? {
                    items.push(v);
                }
                Ok(Value::list(items))
            }
        }
        d.deserialize_any(V)
    }
}

/// A total variable map: unbound names read as integer zero.
#[derive(Clone, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct VarMap(BTreeMap<Ident, Value>);

impl VarMap {
    pub fn new() -> VarMap {
        VarMap::default()
    }

    pub fn get(&self, x: &str) -> Value {
        self.0.get(x).cloned().unwrap_or_default()
    }

    pub fn get_ref(&self, x: &str) -> Option<&Value> {
        self.0.get(x)
    }

    pub fn set(&mut self, x: Ident, v: Value) {
        self.0.insert(x, v);
    }

    pub fn remove(&mut self, x: &str) -> Option<Value> {
        self.0.remove(x)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Ident, &Value)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Compares two maps as total functions, so a missing binding equals an
    /// explicit zero.
    pub fn equivalent(&self, other: &VarMap) -> bool {
        self.0.iter().all(|(k, v)| other.get(k) == *v)
            && other.0.iter().all(|(k, v)| self.get(k) == *v)
    }
}

impl FromIterator<(Ident, Value)> for VarMap {
    fn from_iter<T: IntoIterator<Item = (Ident, Value)>>(iter: T) -> VarMap {
        VarMap(iter.into_iter().collect())
    }
}

impl fmt::Debug for VarMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.0.iter()).finish()
    }
}

/// A memory indexed by nonnegative integers.
///
/// Every cell holds a nonempty history of writes, most recent last. The
/// plain store overwrites the whole history, so programs that only use plain
/// loads and stores see an ordinary total map. Unwritten cells read as `0`.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct Memory {
    cells: BTreeMap<Int, Vec<Value>>,
}

impl Memory {
    pub fn new() -> Memory {
        Memory::default()
    }

    /// The current (most recent) value at `addr`.
    pub fn read(&self, addr: &Int) -> Value {
        self.cells
            .get(addr)
            .and_then(|h| h.last().cloned())
            .unwrap_or_default()
    }

    /// The value `n` writes back in the history of `addr`, if present.
    pub fn read_at(&self, addr: &Int, n: usize) -> Option<Value> {
        match self.cells.get(addr) {
            Some(h) => h.len().checked_sub(n + 1).map(|k| h[k].clone()),
            None if n == 0 => Some(Value::default()),
            None => None,
        }
    }

    pub fn history_len(&self, addr: &Int) -> usize {
        self.cells.get(addr).map_or(1, Vec::len)
    }

    /// Replaces the history of `addr` with the single value `v`.
    pub fn write(&mut self, addr: Int, v: Value) {
        self.cells.insert(addr, vec![v]);
    }

    /// Pushes `v` onto the history of `addr`.
    pub fn append(&mut self, addr: Int, v: Value) {
        self.cells
            .entry(addr)
            .or_insert_with(|| vec![Value::default()])
            .push(v);
    }

    /// Truncates every history to its most recent entry.
    pub fn clear_histories(&mut self) {
        for h in self.cells.values_mut() {
            if h.len() > 1 {
                let last = h.pop().unwrap_or_default();
                *h = vec![last];
            }
        }
    }

    /// Current values of all explicitly written cells.
    pub fn current(&self) -> BTreeMap<Int, Value> {
        self.cells
            .iter()
            .map(|(k, h)| (k.clone(), h.last().cloned().unwrap_or_default()))
            .collect()
    }

    pub fn histories(&self) -> &BTreeMap<Int, Vec<Value>> {
        &self.cells
    }

    /// Compares current contents as total maps, ignoring histories.
    pub fn equivalent(&self, other: &Memory) -> bool {
        self.cells.keys().all(|k| self.read(k) == other.read(k))
            && other.cells.keys().all(|k| self.read(k) == other.read(k))
    }

    /// The same memory with every address shifted by `offset`.
    pub fn shifted(&self, offset: &Int) -> Memory {
        Memory {
            cells: self.cells.iter().map(|(k, h)| (k.add(offset), h.clone())).collect(),
        }
    }

    /// Merges the cells of `other` into `self`, overwriting on conflict.
    pub fn merge(&mut self, other: &Memory) {
        for (k, h) in &other.cells {
            self.cells.insert(k.clone(), h.clone());
        }
    }
}

impl fmt::Debug for Memory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.cells.iter()).finish()
    }
}

impl serde::Serialize for Memory {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(self.cells.iter().map(|(k, h)| {
            let v = if h.len() == 1 { h[0].clone() } else { Value::list(h.clone()) };
            (k.to_string(), v)
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn list_tail_shares_storage_and_compares_by_content() {
        let l = List::new(vec![Value::int(1), Value::int(2), Value::int(3)]);
        let t = l.tail().unwrap();
        assert_eq!(t, List::new(vec![Value::int(2), Value::int(3)]));
        assert_eq!(t.head(), Some(&Value::int(2)));
        assert!(List::new(vec![]).tail().is_none());
    }

    #[test]
    fn varmap_is_total() {
        let mut m = VarMap::new();
        assert_eq!(m.get("x"), Value::int(0));
        m.set("x".into(), Value::int(0));
        assert!(m.equivalent(&VarMap::new()));
    }

    #[test]
    fn memory_histories() {
        let mut m = Memory::new();
        let a = Int::small(3);
        assert_eq!(m.read_at(&a, 0), Some(Value::int(0)));
        assert_eq!(m.read_at(&a, 1), None);
        m.append(a.clone(), Value::int(7));
        m.append(a.clone(), Value::int(8));
        assert_eq!(m.read(&a), Value::int(8));
        assert_eq!(m.read_at(&a, 1), Some(Value::int(7)));
        assert_eq!(m.read_at(&a, 2), Some(Value::int(0)));
        m.clear_histories();
        assert_eq!(m.history_len(&a), 1);
        assert_eq!(m.read(&a), Value::int(8));
        m.write(a.clone(), Value::int(1));
        assert_eq!(m.history_len(&a), 1);
    }
}
