# Problem bindings: qrot, bpdn
