'use strict';
// Runs an emitted agent script against a simulated Java bridge.
// usage: node agent_harness.js <script.js> <commands.json>
// commands: [{"host": msg} | {"call": {"class", "member", "args"}} | {"field": {"class", "member"}}]
// Prints one JSON line per host reply ({"reply": ...}) and per call/field ({"result": ...}).

const fs = require('fs');
const vm = require('vm');

const realMethods = {
  'android.os.BatteryManager#getIntProperty': (id) => (id === 4 ? 87 : -1),
  'android.os.BatteryManager#isCharging': () => false,
  'java.lang.System#currentTimeMillis': () => 1700000000000,
  'android.os.SystemClock#elapsedRealtime': () => 123456,
  'android.hardware.SystemSensorManager$SensorEventQueue#dispatchSensorEvent':
    (handle, values) => Array.from(values),
  'android.app.ActivityThread#currentApplication': () => ({
    getApplicationContext: () => ({ getSystemService: (name) => ({ service: name }) }),
  }),
};

const realFields = {
  'android.os.Build#MODEL': 'RealPhone',
  'android.os.Build#MANUFACTURER': 'RealCorp',
  'android.os.Build$VERSION#RELEASE': '13',
};

const classes = {};

function member(cls, name) {
  const key = cls + '#' + name;
  const real = realMethods[key] || (() => undefined);
  const m = function (...args) {
    return m.invoke(this, args);
  };
  m.implementation = null;
  m.value = realFields[key];
  m.overload = () => m;
  m.invoke = (self, args) => (m.implementation ? m.implementation.apply(self, args) : real(...args));
  m.call = (self, ...args) => real(...args);
  return m;
}

function useClass(name) {
  if (!classes[name]) {
    const members = {};
    classes[name] = new Proxy({}, {
      get(_, prop) {
        if (typeof prop !== 'string') return undefined;
        if (!members[prop]) members[prop] = member(name, prop);
        return members[prop];
      },
    });
  }
  return classes[name];
}

function instanceOf(cls) {
  return new Proxy({}, {
    get(_, prop) {
      if (prop === 'mManager') {
        // Sensor handles double as sensor type ids.
        return { value: { mHandleToSensor: { value: { get: (h) => ({ getType: () => h }) } } } };
      }
      const m = useClass(cls)[prop];
      return (...args) => m.invoke(this, args);
    },
  });
}

const output = [];
let handler = null;

const Java = {
  use: useClass,
  perform: (fn) => fn(),
  cast: (obj, cls) => (obj && obj.getType ? obj : instanceOf(Object.keys(classes).find((k) => classes[k] === cls))),
};

const context = vm.createContext({
  Java,
  send: (message) => output.push(JSON.stringify({ reply: message })),
  recv: (cb) => {
    handler = cb;
  },
  console,
});

const script = fs.readFileSync(process.argv[2], 'utf8');
const commands = JSON.parse(fs.readFileSync(process.argv[3], 'utf8'));
vm.runInContext(script, context, { filename: 'agent.js' });

for (const command of commands) {
  if (command.host) {
    const cb = handler;
    handler = null;
    if (!cb) {
      output.push(JSON.stringify({ error: 'agent stopped listening' }));
      break;
    }
    cb(command.host);
  } else if (command.call) {
    const c = command.call;
    const m = useClass(c.class)[c.member];
    output.push(JSON.stringify({ result: m.invoke(instanceOf(c.class), c.args || []) }));
  } else if (command.field) {
    const f = command.field;
    output.push(JSON.stringify({ result: useClass(f.class)[f.member].value }));
  }
}
process.stdout.write(output.map((l) => l + '\n').join(''));
