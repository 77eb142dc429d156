#include <iostream>

class Base {
public:
    virtual ~Base() {}
    virtual void action() { std::cout << "base" << std::endl; }
};

class Derived : public Base {
public:
    virtual void action() { std::cout << "derived" << std::endl; }
};

int main() {
    Derived d;
    Base &b = d;
    b.action();
    return 0;
}
