int a = 3;
int main() {
  int *p = 0;
  a = *p;
  printf("%d\n", a);
  return 0;
}
